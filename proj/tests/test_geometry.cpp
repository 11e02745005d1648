#include <doctest.h>

#include "udn/geometry.hpp"
#include "udn/numerics.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

using namespace udn;
using doctest::Approx;

namespace {

constexpr double kPi = std::numbers::pi;

NetworkModel single_tier(double lambda, bool los) {
  NetworkModel m;
  TierParams t;
  t.density = lambda;
  t.tx_power = dbm_to_watts(33.0);
  t.antenna_height = 10.0;
  m.tiers.push_back(t);
  m.blockage.los_enabled = los;
  return m;
}

// LoS probability written out from the blockage model with std::erf.
double los_oracle(double x, double hb, double hu, double rho, double eps, double ups) {
  const double h = hb - hu;
  const double s = rho * std::sqrt(2.0);
  const double base =
      1.0 - std::sqrt(kPi / 2.0) * (rho / h) * (std::erf(hb / s) - std::erf(hu / s));
  return std::pow(base, std::sqrt(eps * ups * (x * x - h * h)));
}

} // namespace

TEST_SUITE("geometry") {

TEST_CASE("los probability endpoints and regression value") {
  const NetworkModel m = default_two_tier(1e-4);
  CHECK(los_probability(m.height_gap(1), 1, m) == Approx(1.0));
  CHECK(los_probability(10000.0, 0, m) < 1e-6);
  CHECK(los_probability(10000.0, 1, m) < 1e-6);

  const double ref = los_oracle(100.0, 10.0, 1.5, 20.0, 0.5, 300e-6);
  CHECK(los_probability(100.0, 1, m) == Approx(ref).epsilon(1e-12));
  CHECK(los_probability(100.0, 1, m) == Approx(0.0240064156719).epsilon(1e-10));
  CHECK(link_probability(LinkClass::nlos, 100.0, 1, m) == Approx(1.0 - ref).epsilon(1e-12));
  CHECK_THROWS_AS(los_probability(5.0, 1, m), ParameterError);

  NetworkModel off = m;
  off.blockage.los_enabled = false;
  CHECK(los_probability(100.0, 1, off) == 0.0);
}

TEST_CASE("closed-form link mass against direct integration") {
  const NetworkModel m = default_two_tier(1e-4);
  for (int j = 0; j < 2; ++j) {
    const LosProfile p = los_profile(j, m);
    for (double x : {p.h + 0.01, 30.0, 120.0, 800.0}) {
      // composite Simpson in u = sqrt(t^2 - h^2), where t dt = u du
      const int n = 20000;
      const double U = std::sqrt(x * x - p.h * p.h), step = U / n;
      double sl = 0.0, sn = 0.0;
      for (int i = 0; i <= n; ++i) {
        const double u = i * step;
        const double t = std::sqrt(u * u + p.h * p.h);
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        sl += w * u * p.los(t);
        sn += w * u * p.nlos(t);
      }
      sl *= step / 3.0;
      sn *= step / 3.0;
      CHECK(p.mass(LinkClass::los, x) == Approx(sl).epsilon(1e-8));
      CHECK(p.mass(LinkClass::nlos, x) == Approx(sn).epsilon(1e-8).scale(1e-12));
      const double target = p.mass(LinkClass::nlos, x);
      if (target > 0)
        CHECK(p.mass_inverse(LinkClass::nlos, target) == Approx(x).epsilon(1e-8));
    }
  }
}

TEST_CASE("empty network gives an empty realization") {
  NetworkModel m = default_two_tier(1e-4);
  m.tiers[0].density = 0.0;
  m.tiers[1].density = 0.0;
  const BsRealization r = sample_realization(m, 500.0, std::uint64_t{7});
  CHECK(r.points.empty());
}

TEST_CASE("poisson point count matches lambda pi R^2") {
  const NetworkModel m = single_tier(1e-4, false);
  const double R = 1000.0;
  const double mean = 1e-4 * kPi * R * R;
  CHECK(mean == Approx(314.159).epsilon(1e-5));
  RealizationSampler s(m, R);
  BsRealization r;
  RunningStats st;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    Rng rng = substream(seed, 0);
    s.sample(rng, r);
    st.add(static_cast<double>(r.points.size()));
  }
  CHECK(std::abs(st.mean() - mean) < 3.0 * st.std_error());
  for (const auto &p : r.points) {
    CHECK(p.horizontal <= R);
    CHECK(p.distance == Approx(std::hypot(p.horizontal, m.height_gap(0))));
  }
}

TEST_CASE("sampled LoS fraction follows the LoS probability") {
  NetworkModel m = default_two_tier(1e-2, 0.0);
  RealizationSampler s(m, 110.0);
  BsRealization r;
  std::int64_t hits = 0, los = 0;
  for (std::uint64_t t = 0; hits < 100000; ++t) {
    Rng rng = substream(3, t);
    s.sample(rng, r);
    for (const auto &p : r.points) {
      if (p.tier == 1 && p.distance >= 99.0 && p.distance <= 101.0) {
        ++hits;
        los += p.link == LinkClass::los;
      }
    }
  }
  const double p = los_probability(100.0, 1, m);
  const Interval ci = wilson_interval(los, hits, 0.9999);
  CHECK(p >= ci.lo);
  CHECK(p <= ci.hi);
}

TEST_CASE("hexagonal tier keeps its density") {
  NetworkModel m = single_tier(1e-4, false);
  m.tiers[0].deployment = Deployment::hex_grid;
  const double R = 2000.0;
  RealizationSampler s(m, R);
  BsRealization r;
  RunningStats st;
  for (std::uint64_t t = 0; t < 200; ++t) {
    Rng rng = substream(11, t);
    s.sample(rng, r);
    st.add(static_cast<double>(r.points.size()));
  }
  CHECK(st.mean() == Approx(1e-4 * kPi * R * R).epsilon(0.01));
}

TEST_CASE("window radius from the closed-form tail") {
  const double lam = 1e-4, frac = 1e-3;
  NetworkModel m = single_tier(lam, false);
  m.channel.alpha_los = 4.0;
  m.channel.alpha_nlos = 4.0;
  const double h = m.height_gap(0), P = m.tiers[0].tx_power;
  // median main link: pi lam (x^2 - h^2) = ln 2
  const double xmed2 = h * h + std::log(2.0) / (kPi * lam);
  CHECK(median_main_arlp(m) == Approx(P / (xmed2 * xmed2)).epsilon(1e-8));
  // 2 pi lam P / (2 x0^2) = frac * median
  const double x0sq = kPi * lam * P / (frac * P / (xmed2 * xmed2));
  const double R = std::sqrt(x0sq - h * h);
  CHECK(R > 10.0 * 0.5 / std::sqrt(lam));
  CHECK(window_radius_for(m, frac) == Approx(R).epsilon(1e-6));
  CHECK(arlp_tail_beyond(m, R) == Approx(2.0 * kPi * lam * P / (2.0 * x0sq)).epsilon(1e-10));
}

TEST_CASE("window radius monotonicity and divergence") {
  const NetworkModel m = default_two_tier(1e-4);
  const double r1 = window_radius_for(m, 1e-2);
  const double r2 = window_radius_for(with_total_density(m, 2e-4), 1e-2);
  CHECK(r2 < r1);

  NetworkModel a = single_tier(1e-4, false);
  a.channel.alpha_los = 2.0;
  a.channel.alpha_nlos = 3.5;
  const double narrow = window_radius_for(a, 1e-2);
  a.channel.alpha_nlos = 2.5;
  CHECK(window_radius_for(a, 1e-2) > 1000.0 * narrow);
  a.channel.alpha_nlos = 2.1;
  CHECK_THROWS_AS(window_radius_for(a, 1e-2), NumericError);
  a.channel.alpha_nlos = 2.0;
  CHECK_THROWS_AS(arlp_tail_beyond(a, 100.0), ParameterError);
}

TEST_CASE("realization csv") {
  BsRealization r;
  r.points.push_back({0, 30.0, 40.0, LinkClass::los});
  r.points.push_back({1, 5.0, 10.0, LinkClass::nlos});
  std::ostringstream os;
  write_realization_csv(os, r);
  CHECK(os.str() == "tier,y_m,x_m,link_class\n1,30,40,LoS\n2,5,10,NLoS\n");
}

TEST_CASE("window radius above the point cap is rejected") {
  const NetworkModel m = single_tier(1e-2, false);
  SamplingLimits lim;
  lim.max_expected_points = 1000;
  CHECK_THROWS_AS(RealizationSampler(m, 1000.0, lim), CapacityError);
}

}
