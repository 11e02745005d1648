#include <doctest.h>

#include "udn/numerics.hpp"

#include <cmath>
#include <numbers>

using namespace udn;
using doctest::Approx;

namespace {

double erf_series(double x) {
  double term = x, sum = x;
  for (int n = 1; n < 200; ++n) {
    term *= -x * x / n;
    sum += term / (2 * n + 1);
  }
  return 2.0 / std::sqrt(std::numbers::pi) * sum;
}

// direct power series, |z| < 1
double hyp2f1_series(double a, double b, double c, double z) {
  double term = 1.0, sum = 1.0;
  for (int n = 0; n < 1000000; ++n) {
    term *= (a + n) * (b + n) / ((c + n) * (n + 1)) * z;
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum))
      break;
  }
  return sum;
}

double poisson_cdf(int n, double mean) {
  double p = std::exp(-mean), s = p;
  for (int i = 1; i <= n; ++i) {
    p *= mean / i;
    s += p;
  }
  return s;
}

} // namespace

TEST_SUITE("numerics") {

TEST_CASE("erf") {
  CHECK(udn::erf(0.0) == 0.0);
  CHECK(udn::erf(6.0) == Approx(1.0).epsilon(1e-12));
  CHECK(udn::erf(1.0) == Approx(0.8427007929).epsilon(1e-10));
  for (double x : {0.1, 0.7, 1.9, 2.5})
    CHECK(udn::erf(x) == Approx(erf_series(x)).epsilon(1e-12));
  CHECK(udn::erf(-0.3) == -udn::erf(0.3));
}

TEST_CASE("gamma functions") {
  CHECK(gamma_fn(1.5) == Approx(std::sqrt(std::numbers::pi) / 2).epsilon(1e-12));
  CHECK(gamma_fn(5.0) == Approx(24.0).epsilon(1e-12));
  for (double a : {0.5, 1.0, 2.5, 7.0})
    CHECK(regularized_upper_gamma(a, 0.0) == Approx(1.0));
  for (double x : {0.1, 1.0, 3.0, 10.0})
    CHECK(regularized_upper_gamma(1.0, x) == Approx(std::exp(-x)).epsilon(1e-12));
  // Gamma(3, x)/Gamma(3) = e^{-x}(1 + x + x^2/2)
  for (double x : {0.5, 2.0, 6.0})
    CHECK(regularized_upper_gamma(3.0, x) ==
          Approx(std::exp(-x) * (1 + x + x * x / 2)).epsilon(1e-12));
  CHECK(lower_incomplete_gamma(2.0, 1.0) == Approx(1.0 - 2.0 / std::exp(1.0)).epsilon(1e-12));
  double prev = 1.0;
  for (double x = 0.25; x < 20; x += 0.25) {
    const double q = regularized_upper_gamma(2.7, x);
    CHECK(q <= prev);
    prev = q;
  }
  CHECK_THROWS_AS(gamma_fn(-1.0), ParameterError);
  CHECK_THROWS_AS(regularized_upper_gamma(1.0, -1.0), ParameterError);
}

TEST_CASE("hyp2f1 identities") {
  CHECK(hyp2f1(1.3, 0.4, 2.2, 0.0) == 1.0);
  CHECK(hyp2f1(1, 1, 2, -1) == Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(hyp2f1(1, 0.5, 1.5, -4) == Approx(std::atan(2.0) / 2).epsilon(1e-12));
  for (double z : {-0.5, -3.0, -40.0, -1e4})
    CHECK(hyp2f1(1, 1, 2, z) == Approx(-std::log1p(-z) / z).epsilon(1e-11));
}

TEST_CASE("hyp2f1 against the series on the interference family") {
  // 2F1(1, 1 - d; 2 - d; z), d = 2/alpha
  for (int i = 0; i < 10; ++i) {
    const double alpha = 2.2 + 0.4 * i;
    const double d = 2.0 / alpha;
    for (int k = 0; k < 10; ++k) {
      const double z = -0.9 * (k + 0.5) / 10.0;
      const double ref = hyp2f1_series(1.0, 1.0 - d, 2.0 - d, z);
      CHECK(std::abs(hyp2f1(1.0, 1.0 - d, 2.0 - d, z) / ref - 1.0) < 1e-10);
    }
  }
  // beyond the unit disk, through the Pfaff form of the oracle
  for (double z : {-2.0, -15.0, -300.0}) {
    const double w = z / (z - 1.0);
    const double a = 1.0, b = 0.5, c = 1.5;
    const double ref = std::pow(1.0 - z, -a) * hyp2f1_series(a, c - b, c, w);
    CHECK(std::abs(hyp2f1(a, b, c, z) / ref - 1.0) < 1e-10);
  }
}

TEST_CASE("integrate_1d") {
  auto e = integrate_1d([](double t) { return std::exp(-t); }, 0.0, INFINITY);
  CHECK(e.value == Approx(1.0).epsilon(1e-8));
  CHECK(integrate_1d([](double t) { return t * t; }, 0.0, 1.0).value ==
        Approx(1.0 / 3).epsilon(1e-12));
  const double lam = 1e-3, h = 8.5;
  auto pdf = [&](double t) {
    return 2 * std::numbers::pi * lam * t * std::exp(-std::numbers::pi * lam * (t * t - h * h));
  };
  QuadSpec q;
  q.tail_scale = 20.0;
  CHECK(integrate_1d(pdf, h, INFINITY, q).value == Approx(1.0).epsilon(1e-7));
  q.tail_policy = TailPolicy::truncate_at_negligible;
  CHECK(integrate_1d(pdf, h, INFINITY, q).value == Approx(1.0).epsilon(1e-7));
}

TEST_CASE("integrate_1d on arrays") {
  auto f = [](double t) {
    Eigen::ArrayXd v(3);
    v << 1.0, t, std::exp(-t);
    return v;
  };
  const auto r = integrate_1d(f, 0.0, 2.0);
  CHECK(r.value[0] == Approx(2.0));
  CHECK(r.value[1] == Approx(2.0));
  CHECK(r.value[2] == Approx(1.0 - std::exp(-2.0)).epsilon(1e-10));
}

TEST_CASE("integrate_1d reports non-convergence") {
  QuadSpec q;
  q.max_subdivisions = 3;
  q.rel_tol = 1e-14;
  q.abs_tol = 1e-300;
  CHECK_THROWS_AS(integrate_1d([](double t) { return std::sin(50 * t) / std::sqrt(t); }, 0.0,
                               10.0, q),
                  ConvergenceError);
}

TEST_CASE("gauss_legendre is exact for low-degree polynomials") {
  for (int n : {1, 4, 6, 12}) {
    const GaussRule g = gauss_legendre(n);
    for (int deg = 0; deg < 2 * n; ++deg) {
      const double exact = deg % 2 ? 0.0 : 2.0 / (deg + 1);
      double s = 0.0;
      for (int i = 0; i < n; ++i)
        s += g.weights[i] * std::pow(g.nodes[i], deg);
      CHECK(s == Approx(exact).epsilon(1e-12).scale(1.0));
    }
  }
}

TEST_CASE("find_root_monotone") {
  CHECK(find_root_monotone([](double x) { return x - 2; }, 0, 10, 1e-12) ==
        Approx(2.0).epsilon(1e-12));
  CHECK(find_root_monotone([](double x) { return x * x - 2; }, 0, 2, 1e-12) ==
        Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(find_root_monotone([](double x) { return x * x + 1; }, 0, 2, 1e-12),
                  BracketError);
}

TEST_CASE("poisson_truncation is the minimal n") {
  CHECK(poisson_truncation(0.0) == 0);
  for (double mean : {0.01, 1.0, 3.0, 12.5, 40.0}) {
    for (double tail : {1e-2, 1e-4, 1e-8}) {
      TruncationBudget b;
      b.tail_mass = tail;
      const int n = poisson_truncation(mean, b);
      CHECK(poisson_cdf(n, mean) >= 1 - tail);
      if (n > 0)
        CHECK(poisson_cdf(n - 1, mean) < 1 - tail);
    }
  }
  CHECK(poisson_truncation(1.0) == 6);
  CHECK(poisson_truncation(3.0) == 11);
  TruncationBudget tight;
  tight.max_terms_per_sum = 5;
  CHECK_THROWS_AS(poisson_truncation(30.0, tight), TruncationError);
}

TEST_CASE("statistics helpers") {
  RunningStats a, b, all;
  for (int i = 0; i < 100; ++i) {
    const double x = std::sin(i * 1.3);
    (i < 37 ? a : b).add(x);
    all.add(x);
  }
  a.merge(b);
  CHECK(a.count() == 100);
  CHECK(a.mean() == Approx(all.mean()).epsilon(1e-14));
  CHECK(a.variance() == Approx(all.variance()).epsilon(1e-12));

  const Interval w = wilson_interval(50, 100, 0.95);
  CHECK(w.lo == Approx(0.4038).epsilon(1e-3));
  CHECK(w.hi == Approx(0.5962).epsilon(1e-3));
  const Interval z = wilson_interval(0, 1000, 0.95);
  CHECK(z.lo == 0.0);
  CHECK(z.hi > 0.0);
  CHECK(normal_quantile(0.975) == Approx(1.959963985).epsilon(1e-8));

  CompensatedSum s;
  s.add(1e16);
  for (int i = 0; i < 1000; ++i)
    s.add(1.0);
  s.add(-1e16);
  CHECK(s.value() == 1000.0);
}

}
