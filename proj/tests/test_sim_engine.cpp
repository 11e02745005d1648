#include <doctest.h>

#include "udn/sim_engine.hpp"

#include <cmath>
#include <cstring>

using namespace udn;
using doctest::Approx;

namespace {

NetworkModel nlos_single_tier(double lambda, double alpha) {
  NetworkModel m;
  TierParams t;
  t.density = lambda;
  t.tx_power = 1.0;
  t.antenna_height = 2.0;
  m.tiers.push_back(t);
  m.blockage.los_enabled = false;
  m.channel.alpha_los = alpha;
  m.channel.alpha_nlos = alpha;
  m.channel.m_los = 1;
  m.channel.m_nlos = 1;
  return m;
}

bool same(const MetricValue &a, const MetricValue &b) {
  return std::memcmp(&a, &b, sizeof(MetricValue)) == 0;
}

} // namespace

TEST_SUITE("sim_engine") {

TEST_CASE("hand-computed SIR") {
  NetworkModel m = nlos_single_tier(1e-4, 4.0);
  BsRealization r;
  r.points = {{0, 0.0, 100.0, LinkClass::nlos}, {0, 0.0, 200.0, LinkClass::nlos}};
  const std::vector<double> ones = {1.0, 1.0};
  const CompAssignment a = assign(r, CompPolicy::no_comp(), m);
  const TrialOutcome o = trial_sir(r, a, m, ones, 1.0);
  CHECK(o.sir == Approx(16.0));
  CHECK(o.covered);
  CHECK(o.comp_size == 1);

  // two equal cooperators and one interferer: coherent gain of four
  BsRealization r2;
  r2.points = {{0, 0.0, 100.0, LinkClass::nlos},
               {0, 0.0, 100.0, LinkClass::nlos},
               {0, 0.0, 300.0, LinkClass::nlos}};
  const std::vector<double> g3 = {1.0, 1.0, 1.0};
  const TrialOutcome c = trial_sir(r2, assign(r2, CompPolicy::rrlp(1, 0.5), m), m, g3, 1.0);
  const double A = std::pow(100.0, -4.0), B = std::pow(300.0, -4.0);
  CHECK(c.comp_size == 2);
  CHECK(c.sir == Approx(4.0 * A / B));

  // a common power scale cancels
  NetworkModel big = m;
  big.tiers[0].tx_power = 37.0;
  const TrialOutcome d = trial_sir(r2, assign(r2, CompPolicy::rrlp(1, 0.5), big), big, g3, 1.0);
  CHECK(d.sir == Approx(c.sir).epsilon(1e-12));

  // nothing left to interfere
  const TrialOutcome s = trial_sir(r, assign(r, CompPolicy::rrlp(1, 0.01), m), m, ones, 1.0);
  CHECK(s.sentinel);
  CHECK(std::isinf(s.sir));
  CHECK(s.covered);
  CHECK_THROWS_AS(trial_sir(r, a, m, g3, 1.0), ParameterError);
}

TEST_CASE("coverage limits") {
  const NetworkModel m = default_two_tier(1e-4);
  SimConfig cfg;
  cfg.trials = 2000;
  const CompPolicy p[] = {CompPolicy::rrlp(2, db_to_ratio(-6.5)), CompPolicy::no_comp()};
  const double t[] = {0.0, 1e12};
  const auto rep = simulate(m, p, t, cfg);
  REQUIRE(rep.size() == 4);
  for (std::size_t i = 0; i < rep.size(); i += 2) {
    CHECK(rep[i].coverage.value == 1.0);
    CHECK(rep[i + 1].coverage.value == 0.0);
    CHECK(rep[i + 1].tx_ase.value == 0.0);
    CHECK(rep[i + 1].rx_ase.value == 0.0);
    CHECK(rep[i].empty_trials == 0);
  }
  CHECK(rep[2].mean_comp_size.value == 1.0);
  CHECK(rep[0].scheme == p[0].label());
  CHECK(rep[0].per_tier_comp_size.sum() == Approx(rep[0].mean_comp_size.value));
}

TEST_CASE("transmitter ASE bookkeeping") {
  const double lam = 1e-4;
  const NetworkModel m = nlos_single_tier(lam, 4.0);
  SimConfig cfg;
  cfg.trials = 3000;
  cfg.window_radius = 800.0;
  const CompPolicy p[] = {CompPolicy::fnsb(2), CompPolicy::no_comp()};
  const double t[] = {1.0};
  const auto rep = simulate(m, p, t, cfg);
  // every trial holds at least two points, so N = 2 in tier 1
  CHECK(rep[0].mean_comp_size.value == 2.0);
  CHECK(rep[0].tx_ase.value == Approx(lam * rep[0].per_user_se.value / 2.0).epsilon(1e-12));
  CHECK(rep[1].tx_ase.value == Approx(lam * rep[1].per_user_se.value).epsilon(1e-12));
  CHECK(rep[1].rx_ase.value ==
        Approx(m.user_density * rep[1].per_user_se.value).epsilon(1e-12));
  CHECK(rep[0].coverage.value > rep[1].coverage.value);
}

TEST_CASE("common random numbers across policies") {
  const NetworkModel m = default_two_tier(1e-3);
  SimConfig cfg;
  cfg.trials = 300;
  const CompPolicy p[] = {CompPolicy::no_comp(), CompPolicy::rrlp(2, 0.3)};
  int checked = 0;
  for_each_trial(m, p, 1.0, cfg, [&](std::int64_t, const BsRealization &,
                                     std::span<const TrialOutcome> o) {
    REQUIRE(o.size() == 2);
    CHECK(o[0].main_distance == o[1].main_distance);
    CHECK(o[0].main_tier == o[1].main_tier);
    // cooperation only adds signal and removes interference
    if (!o[0].empty)
      CHECK(o[1].sir >= o[0].sir * (1 - 1e-12));
    ++checked;
  });
  CHECK(checked == 300);
}

TEST_CASE("results do not depend on the worker count") {
  const NetworkModel m = default_two_tier(1e-4);
  const CompPolicy p[] = {CompPolicy::rrlp(2, db_to_ratio(-6.5)), CompPolicy::fnsb(2)};
  const double t[] = {0.5, 2.0};
  SimConfig cfg;
  cfg.trials = 5000;
  cfg.block_size = 256;
  cfg.workers = 1;
  const auto a = simulate(m, p, t, cfg);
  for (int w : {4, 16}) {
    cfg.workers = w;
    const auto b = simulate(m, p, t, cfg);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(same(a[i].coverage, b[i].coverage));
      CHECK(same(a[i].per_user_se, b[i].per_user_se));
      CHECK(same(a[i].tx_ase, b[i].tx_ase));
      CHECK(same(a[i].mean_comp_size, b[i].mean_comp_size));
      CHECK(a[i].per_tier_comp_size == b[i].per_tier_comp_size);
    }
  }
}

TEST_CASE("power model") {
  const NetworkModel m = default_two_tier(1e-4);
  const PowerModel pw = PowerModel::defaults(2);
  const PowerBreakdown z = network_power(m, pw, Eigen::VectorXd::Zero(2), 0.0);
  CHECK(z.bs_power[1] == Approx(1.0 + 18.0 + 1.99526 / 0.39).epsilon(1e-5));
  CHECK(z.bs_power[1] == Approx(24.12).epsilon(1e-3));
  CHECK(z.ue_power == Approx(0.01));
  const double dsp = 3.0 * 20e6 / (200.0 * 12.8e9);
  CHECK(dsp == Approx(2.344e-5).epsilon(1e-3));
  Eigen::VectorXd n(2);
  n << 0.4, 1.6;
  const PowerBreakdown p = network_power(m, pw, n, 2.0);
  const double u1 = m.user_density * 1.6 / m.tiers[1].density;
  CHECK(p.users_per_bs[1] == Approx(u1));
  CHECK(p.bs_power[1] - z.bs_power[1] == Approx(dsp * u1).epsilon(1e-9));
  CHECK(p.ue_power == Approx(0.01 + 2.0 * 20e6 * 0.8e-9));
  const double areal = m.tiers[0].density * p.bs_power[0] + m.tiers[1].density * p.bs_power[1] +
                       m.user_density * p.ue_power;
  CHECK(p.p_nec == Approx(areal).epsilon(1e-12));

  MetricsReport r;
  r.per_tier_comp_size = n;
  r.per_user_se.value = 2.0;
  r.rx_ase.value = m.user_density * 2.0;
  r.tx_ase.value = 1e-4;
  nee(m, pw, r);
  CHECK(r.p_nec == Approx(areal));
  CHECK(r.rx_nee.value == Approx(20e6 * r.rx_ase.value / areal));
  CHECK(r.tx_nee.value == Approx(20e6 * 1e-4 / areal));
}

TEST_CASE("argument validation") {
  const NetworkModel m = default_two_tier(1e-4);
  CHECK_THROWS_AS(coverage_mc(m, CompPolicy::no_comp(), 1.0, 10, 1), ParameterError);
  SimConfig cfg;
  const CompPolicy p[] = {CompPolicy::rrlp(3, 0.5)};
  const double t[] = {1.0};
  CHECK_THROWS_AS(simulate(m, p, t, cfg), ConfigError);
}

}
