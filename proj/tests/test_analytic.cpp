#include <doctest.h>

#include "udn/analytic.hpp"
#include "udn/association.hpp"
#include "udn/channel.hpp"
#include "udn/geometry.hpp"

#include <cmath>
#include <numbers>
#include <vector>

using namespace udn;
using doctest::Approx;

namespace {

constexpr double kPi = std::numbers::pi;

NetworkModel nlos_single_tier(double lambda, double alpha) {
  NetworkModel m;
  TierParams t;
  t.density = lambda;
  t.tx_power = dbm_to_watts(33.0);
  t.antenna_height = 10.0;
  m.tiers.push_back(t);
  m.blockage.los_enabled = false;
  m.channel.alpha_los = alpha;
  m.channel.alpha_nlos = alpha;
  m.channel.m_los = 1;
  m.channel.m_nlos = 1;
  return m;
}

double tau(int m, int w) {
  return std::tgamma(m + 0.5 * w) / (std::tgamma(m) * std::pow(m, 0.5 * w));
}

// E[(sum a_i A_i)^4] by expanding every ordered 4-tuple of links.
double brute_xi(const std::vector<double> &a, const std::vector<int> &m) {
  const std::size_t n = a.size();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = 0; l < n; ++l) {
          std::vector<int> pw(n, 0);
          ++pw[i], ++pw[j], ++pw[k], ++pw[l];
          double term = a[i] * a[j] * a[k] * a[l];
          for (std::size_t q = 0; q < n; ++q)
            term *= tau(m[q], pw[q]);
          s += term;
        }
  return s;
}

// exp(-2 pi lambda int_R^inf t s P t^-4 / (1 + s P t^-4) dt) for Rayleigh at alpha = 4
double laplace_alpha4(double lambda, double P, double R, double s) {
  const double c = std::sqrt(s * P);
  return std::exp(-kPi * lambda * c * (kPi / 2.0 - std::atan(R * R / c)));
}

} // namespace

TEST_SUITE("analytic") {

TEST_CASE("association probabilities and main-link densities") {
  const NetworkModel m = default_two_tier(1e-4);
  const auto laws = association_law(m);
  REQUIRE(laws.size() == 4);
  double total = 0.0;
  for (const auto &law : laws) {
    total += law.assoc_prob();
    CHECK(law.cdf(1e7) == Approx(1.0).epsilon(1e-6));
    const double med = law.median();
    CHECK(law.cdf(med) == Approx(0.5).epsilon(1e-6));
  }
  CHECK(total == Approx(1.0).epsilon(1e-6));
}

TEST_CASE("association probabilities agree with main-link frequencies") {
  const NetworkModel m = default_two_tier(1e-4);
  const auto laws = association_law(m);
  const double R = comp_window_radius(m, Eigen::MatrixXd::Constant(2, 2, 1.0));
  RealizationSampler s(m, R);
  BsRealization r;
  const int n = 60000;
  std::vector<int> hits(4, 0);
  for (int t = 0; t < n; ++t) {
    Rng rng = substream(77, t);
    s.sample(rng, r);
    const CompAssignment a = assign(r, CompPolicy::no_comp(), m);
    if (!a.empty)
      ++hits[2 * a.main_tier + index_of(a.main_class)];
  }
  for (int i = 0; i < 4; ++i) {
    const double p = laws[i].assoc_prob();
    const double se = std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(double(hits[i]) / n - p) <= 3.0 * se + 1e-12);
  }
}

TEST_CASE("single-tier NLoS main-link law is closed form") {
  const double lam = 1e-4;
  const NetworkModel m = nlos_single_tier(lam, 4.0);
  const auto laws = association_law(m);
  double total = 0.0;
  for (const auto &l : laws)
    total += l.assoc_prob();
  CHECK(total == Approx(1.0).epsilon(1e-9));
  const MainLinkLaw *nl = nullptr;
  for (const auto &l : laws)
    if (l.link_class() == LinkClass::nlos)
      nl = &l;
  REQUIRE(nl != nullptr);
  CHECK(nl->assoc_prob() == Approx(1.0).epsilon(1e-9));
  const double h = m.height_gap(0);
  for (double r : {h + 1.0, 40.0, 80.0, 200.0}) {
    const double f = 2 * kPi * lam * r * std::exp(-kPi * lam * (r * r - h * h));
    CHECK(nl->pdf(r) == Approx(f).epsilon(1e-9));
  }
}

TEST_CASE("fourth moment matches the brute-force expansion") {
  Rng rng = substream(2024, 0);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  const int shapes[] = {1, 2, 10};
  for (int n = 1; n <= 4; ++n) {
    int combos = 1;
    for (int i = 0; i < n; ++i)
      combos *= 3;
    for (int c = 0; c < combos; ++c) {
      std::vector<double> a(n);
      std::vector<int> m(n);
      int code = c;
      for (int i = 0; i < n; ++i) {
        a[i] = u(rng);
        m[i] = shapes[code % 3];
        code /= 3;
      }
      const double ref = brute_xi(a, m);
      CHECK(amplitude_fourth_moment(a, m) == Approx(ref).epsilon(1e-12));
    }
  }
}

TEST_CASE("single link gamma approximation is exact") {
  const NetworkModel m = default_two_tier(1e-4);
  for (LinkClass c : kBothClasses) {
    const CoopLink main{1, c, 120.0};
    const GammaApprox g = gamma_approx(main, {}, m);
    const int mm = m.channel.m(c);
    const double y = m.tiers[1].tx_power * std::pow(120.0, -m.channel.alpha(c));
    CHECK(g.shape == Approx(mm).epsilon(1e-9));
    CHECK(g.scale == Approx(y / mm).epsilon(1e-9));
    CHECK(g.k0_floor == mm);
    CHECK(g.k0_ceil == mm);
  }
}

TEST_CASE("gamma approximation moments") {
  const std::vector<double> a = {1.0, 0.7, 0.4};
  const std::vector<int> m = {10, 1, 1};
  const GammaApprox g = gamma_approx_amplitudes(a, m);
  // E[S^2] and Var[S^2] written out pairwise
  double es2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j)
      es2 += i == j ? a[i] * a[i] : a[i] * a[j] * tau(m[i], 1) * tau(m[j], 1);
  const double var = brute_xi(a, m) - es2 * es2;
  CHECK(g.shape * g.scale == Approx(es2).epsilon(1e-12));
  CHECK(g.shape * g.scale * g.scale == Approx(var).epsilon(1e-12));

  // two Rayleigh links against sampled moments
  const std::vector<double> b = {1.0, 1.0};
  const std::vector<int> r = {1, 1};
  const GammaApprox h = gamma_approx_amplitudes(b, r);
  Rng rng = substream(99, 0);
  std::exponential_distribution<double> e(1.0);
  RunningStats p, p2;
  for (int i = 0; i < 1000000; ++i) {
    const double s = std::sqrt(e(rng)) + std::sqrt(e(rng));
    p.add(s * s);
  }
  const double mean = p.mean();
  Rng rng2 = substream(99, 1);
  for (int i = 0; i < 1000000; ++i) {
    const double s = std::sqrt(e(rng2)) + std::sqrt(e(rng2));
    const double d = s * s - mean;
    p2.add(d * d);
  }
  CHECK(std::abs(h.shape * h.scale - mean) < 3.0 * p.std_error());
  CHECK(std::abs(h.shape * h.scale * h.scale - p2.mean()) < 3.0 * p2.std_error() + 0.01);

  // nearly deterministic amplitudes
  const std::vector<int> big = {100000, 100000};
  const GammaApprox d = gamma_approx_amplitudes(b, big);
  CHECK(d.shape * d.scale == Approx(4.0).epsilon(1e-4));
  CHECK(d.scale < 1e-4);
  CHECK(d.shape > 1e4);
}

TEST_CASE("interference laplace transform") {
  const double lam = 1e-4;
  const NetworkModel m = nlos_single_tier(lam, 4.0);
  const double P = m.tiers[0].tx_power;
  for (double R : {20.0, 150.0}) {
    const double lower[] = {R};
    const InterferenceField f = interference_field_beyond(m, lower);
    for (double s : {1e3, 1e6, 1e9}) {
      const double ref = laplace_alpha4(lam, P, R, s);
      const Eigen::ArrayXd a = laplace_series(f, s, 6);
      CHECK(a[0] == Approx(ref).epsilon(1e-8));
      CHECK(laplace_nlos_rayleigh(m, lower, s) == Approx(ref).epsilon(1e-8));
      CHECK((a >= 0).all());
      const Eigen::ArrayXd d = interference_laplace_derivs(f, s, 6);
      for (int k = 0; k <= 6; ++k)
        CHECK((k % 2 ? -d[k] : d[k]) >= 0);
    }
    // L'(s) -> -E[I] as s -> 0
    const double EI = interference_mean(f);
    CHECK(EI == Approx(2 * kPi * lam * P / (2 * R * R)).epsilon(1e-8));
    const Eigen::ArrayXd d = interference_laplace_derivs(f, 1e-6 / EI, 1);
    CHECK(d[0] == Approx(1.0).epsilon(1e-5));
    CHECK(d[1] == Approx(-EI).epsilon(1e-5));
  }

  // no interferers
  NetworkModel empty = m;
  empty.tiers[0].density = 0.0;
  const double lower[] = {10.0};
  CHECK(laplace_series(interference_field_beyond(empty, lower), 1e9, 3)[0] == 1.0);
}

TEST_CASE("laplace transform with LoS interferers keeps its signs") {
  const NetworkModel m = default_two_tier(1e-3);
  const double lower[] = {50.0, 30.0};
  const InterferenceField f = interference_field_beyond(m, lower);
  CHECK(f.classes.size() == 4);
  const double EI = interference_mean(f);
  for (double s : {0.1 / EI, 1.0 / EI, 10.0 / EI}) {
    const Eigen::ArrayXd d = interference_laplace_derivs(f, s, 10);
    for (int k = 0; k <= 10; ++k)
      CHECK((k % 2 ? -d[k] : d[k]) >= 0);
  }
}

TEST_CASE("conditional coverage without cooperation reduces to the special case") {
  const NetworkModel m = nlos_single_tier(1e-4, 4.0);
  const Eigen::MatrixXd one = Eigen::MatrixXd::Ones(1, 1);
  ConditionalOptions opt;
  SpecialCaseOptions sopt;
  for (double r : {15.0, 60.0, 150.0}) {
    for (double t : {0.1, 1.0, 10.0}) {
      const CoverageBracket b = conditional_coverage(r, 0, LinkClass::nlos, t, m, one, opt);
      Rng rng = substream(1, 0);
      const auto s = special_case_conditional(r, 0, t, m, one, sopt, rng);
      CHECK(b.lower == Approx(s.value).epsilon(1e-6));
      CHECK(b.upper == Approx(s.value).epsilon(1e-6));
    }
  }
}

TEST_CASE("conditional bracket ordering and small threshold") {
  const NetworkModel m = default_two_tier(1e-4);
  const Eigen::MatrixXd eta = Eigen::MatrixXd::Constant(2, 2, db_to_ratio(-6.5));
  ConditionalOptions opt;
  opt.inner_samples = 64;
  const double thr[] = {1e-9, 0.5, 1.0, 4.0};
  Rng rng = substream(3, 0);
  const auto b = conditional_coverage(60.0, 1, LinkClass::nlos, thr, m, eta, opt, rng);
  REQUIRE(b.size() == 4);
  for (const auto &x : b) {
    CHECK(x.lower <= x.upper + 1e-12);
    CHECK(x.lower >= 0.0);
    CHECK(x.upper <= 1.0);
  }
  CHECK(b[0].lower >= 1.0 - opt.budget.tail_mass);
  CHECK(b[0].upper == Approx(1.0));
  CHECK(b[1].mid() >= b[3].mid());
}

TEST_CASE("overall coverage without cooperation matches the nearest-BS integral") {
  const double lam = 1e-4;
  const NetworkModel m = nlos_single_tier(lam, 4.0);
  const double P = m.tiers[0].tx_power, h = m.height_gap(0);
  const Eigen::MatrixXd one = Eigen::MatrixXd::Ones(1, 1);
  for (double t : {0.1, 1.0, 10.0}) {
    auto g = [&](double r) {
      const double f = 2 * kPi * lam * r * std::exp(-kPi * lam * (r * r - h * h));
      return f * laplace_alpha4(lam, P, r, t * std::pow(r, 4) / P);
    };
    QuadSpec q;
    q.abs_tol = 1e-12;
    q.rel_tol = 1e-10;
    const double ref = integrate_1d(g, h, std::numeric_limits<double>::infinity(), q).value;
    const CoverageBracket b = coverage_analytic(m, one, t);
    CHECK(b.mid() == Approx(ref).epsilon(2e-3));
    SpecialCaseOptions sopt;
    CHECK(coverage_special_case(m, t, one, sopt).value == Approx(ref).epsilon(2e-3));
  }
}

TEST_CASE("coverage limits") {
  const NetworkModel m = default_two_tier(1e-4);
  const Eigen::MatrixXd eta = Eigen::MatrixXd::Constant(2, 2, db_to_ratio(-6.5));
  AnalyticOptions opt;
  opt.inner.inner_samples = 32;
  opt.outer.panels = 2;
  opt.outer.nodes_per_panel = 3;
  const double thr[] = {0.0, 1e12};
  const CoverageResult r = coverage_analytic(m, eta, thr, opt);
  CHECK(r.brackets[0].lower == Approx(1.0).epsilon(1e-6));
  CHECK(r.brackets[1].upper <= opt.inner.budget.tail_mass);
  CHECK(r.assoc_mass_error < 1e-6);
}

TEST_CASE("layer-cake spectral efficiency") {
  const double g0 = 7.0;
  auto step = [&](double t) { return t <= g0 ? 1.0 : 0.0; };
  for (double t0 : {0.0, 1.0, 3.0})
    CHECK(layer_cake_se(step, t0) == Approx(std::log2(1.0 + g0)).epsilon(1e-6));
  CHECK(layer_cake_se(step, 9.0) == 0.0);

  auto smooth = [](double t) { return 1.0 / (1.0 + t); };
  // int_{t0}^inf dt / ((1+t)^2 ln 2) = 1 / ((1+t0) ln 2)
  const double t0 = 0.5;
  const double ref = std::log2(1.5) / 1.5 + 1.0 / (1.5 * std::numbers::ln2);
  CHECK(layer_cake_se(smooth, t0) == Approx(ref).epsilon(1e-8));
  const LayerCakeRule rule = layer_cake_rule(t0, 40.0, 16, 6);
  double s = std::log2(1.5) * smooth(t0);
  for (std::size_t i = 0; i < rule.nodes.size(); ++i)
    s += rule.weights[i] * smooth(rule.nodes[i]);
  CHECK(s == Approx(ref).epsilon(1e-6));
}

}
