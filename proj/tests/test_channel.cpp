#include <doctest.h>

#include "udn/channel.hpp"
#include "udn/numerics.hpp"

#include <cmath>
#include <numbers>

using namespace udn;
using doctest::Approx;

TEST_SUITE("channel") {

TEST_CASE("arlp power law") {
  NetworkModel m = default_two_tier(1e-4);
  CHECK(arlp(0, 100.0, LinkClass::nlos, m) == Approx(2.512e-6).epsilon(1e-3));
  CHECK(arlp(0, 100.0, LinkClass::nlos, m) ==
        Approx(std::pow(10.0, 1.4) * 1e-7).epsilon(1e-12));
  m.tiers[1].tx_power = 1.0;
  m.tiers[1].antenna_height = 2.0; // h = 0.5 m
  CHECK(arlp(1, 1.0, LinkClass::los, m) == Approx(1.0));
  CHECK(arlp(1, 1.0, LinkClass::nlos, m) == Approx(1.0));
  m.channel.alpha_nlos = 4.0;
  CHECK(arlp(1, 50.0, LinkClass::nlos, m) / arlp(1, 100.0, LinkClass::nlos, m) ==
        Approx(16.0));
  CHECK_THROWS_AS(arlp(1, 0.1, LinkClass::nlos, m), ParameterError);
  CHECK_THROWS_AS(arlp(2, 100.0, LinkClass::nlos, m), ParameterError);
}

TEST_CASE("fading draws have unit mean and variance 1/m") {
  for (int mm : {1, 10}) {
    ChannelParams ch;
    ch.m_los = mm;
    ch.m_nlos = 1;
    Rng rng = substream(42, mm);
    RunningStats g, g2;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) {
      const LinkGain lg = draw_fading(LinkClass::los, ch, rng);
      g.add(lg.power);
      const double d = lg.power - 1.0;
      g2.add(d * d);
      if (i < 10)
        CHECK(lg.amplitude == Approx(std::sqrt(lg.power)));
    }
    CHECK(std::abs(g.mean() - 1.0) < 3.0 * g.std_error());
    CHECK(std::abs(g2.mean() - 1.0 / mm) < 3.0 * g2.std_error());
  }
}

TEST_CASE("amplitude moments") {
  const double sqrt_pi = std::sqrt(std::numbers::pi);
  for (int m : {1, 2, 5, 10})
    CHECK(nakagami_amp_moment(m, 2) == Approx(1.0));
  CHECK(nakagami_amp_moment(1, 1) == Approx(sqrt_pi / 2.0).epsilon(1e-12));
  CHECK(nakagami_amp_moment(10, 4) == Approx(1.1).epsilon(1e-12));
  ChannelParams ch;
  CHECK(amplitude_variance(LinkClass::nlos, ch) == Approx(1.0 - std::numbers::pi / 4.0));
  CHECK(nakagami_amp_moment(LinkClass::los, 4, ch) == nakagami_amp_moment(10, 4));
  CHECK_THROWS_AS(nakagami_amp_moment(0, 1), ParameterError);
}

TEST_CASE("exponentially tilted moments") {
  for (double t : {0.0, 0.3, 2.0})
    CHECK(exp_tilted_moment(1, 0, t) == Approx(1.0 / (1.0 + t)));
  for (int m : {1, 3, 10})
    CHECK(exp_tilted_moment(m, 0, 0.0) == Approx(1.0));

  // Gamma(m, 1/m) density integrated by composite Simpson
  auto oracle = [](int m, int w, double t) {
    const double upper = 60.0;
    const int n = 200000;
    const double step = upper / n;
    double s = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double g = i * step;
      const double f = std::pow(m, m) * std::pow(g, m - 1) * std::exp(-m * g) /
                       std::tgamma(m);
      const double w8 = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      s += w8 * std::pow(g, w) * std::exp(-t * g) * f;
    }
    return s * step / 3.0;
  };
  CHECK(exp_tilted_moment(3, 2, 0.5) == Approx(4.0 / 3.0 * std::pow(7.0 / 6.0, -5.0)).epsilon(1e-12));
  CHECK(exp_tilted_moment(3, 2, 0.5) == Approx(oracle(3, 2, 0.5)).epsilon(1e-9));
  CHECK(exp_tilted_moment(10, 3, 1.7) == Approx(oracle(10, 3, 1.7)).epsilon(1e-9));
  CHECK(exp_tilted_moment(1, 4, 0.2) == Approx(oracle(1, 4, 0.2)).epsilon(1e-9));
}

TEST_CASE("fading sampler matches per-class shapes") {
  ChannelParams ch;
  FadingSampler fs(ch);
  Rng rng = substream(5, 0);
  RunningStats l, n;
  for (int i = 0; i < 200000; ++i) {
    const double a = fs(LinkClass::los, rng) - 1.0;
    const double b = fs(LinkClass::nlos, rng) - 1.0;
    l.add(a * a);
    n.add(b * b);
  }
  CHECK(std::abs(l.mean() - 0.1) < 4.0 * l.std_error());
  CHECK(std::abs(n.mean() - 1.0) < 4.0 * n.std_error());
}

}
