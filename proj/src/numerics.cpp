#include "udn/numerics.hpp"

#include <Eigen/Eigenvalues>

namespace udn {

double gamma_fn(double x) {
  if (!(x > 0) || !std::isfinite(x))
    throw ParameterError("gamma_fn: argument must be positive and finite");
  return std::tgamma(x);
}

namespace {

constexpr double kEps = 1e-16;

// P(a, x) by its power series; converges quickly for x < a + 1.
double lower_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < 100000; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps)
      break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Q(a, x) by the Legendre continued fraction (modified Lentz).
double upper_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 100000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny)
      d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny)
      c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps)
      break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

void check_incomplete_domain(double a, double x) {
  if (!(a > 0) || !(x >= 0) || !std::isfinite(a))
    throw ParameterError("incomplete gamma: need a > 0 and x >= 0");
}

} // namespace

double regularized_lower_gamma(double a, double x) {
  check_incomplete_domain(a, x);
  if (x == 0.0)
    return 0.0;
  if (std::isinf(x))
    return 1.0;
  return x < a + 1.0 ? lower_series(a, x) : 1.0 - upper_fraction(a, x);
}

double regularized_upper_gamma(double a, double x) {
  check_incomplete_domain(a, x);
  if (x == 0.0)
    return 1.0;
  if (std::isinf(x))
    return 0.0;
  return x < a + 1.0 ? 1.0 - lower_series(a, x) : upper_fraction(a, x);
}

double lower_incomplete_gamma(double a, double x) {
  return regularized_lower_gamma(a, x) * std::tgamma(a);
}

namespace {

// plain power series, |u| <= 0.1
double hyp2f1_small(double a, double b, double c, double u) {
  double term = 1.0, sum = 1.0;
  for (int n = 0; n < 2000; ++n) {
    term *= (a + n) * (b + n) / ((c + n) * (n + 1.0)) * u;
    sum += term;
    if (std::abs(term) <= 1e-18 * std::abs(sum))
      break;
  }
  return sum;
}

} // namespace

double hyp2f1(double a, double b, double c, double z) {
  if (c <= 0 && c == std::floor(c))
    throw ParameterError("hyp2f1: c must not be a non-positive integer");
  if (!(z <= 0) || !std::isfinite(z))
    throw ParameterError("hyp2f1: only finite z <= 0 is supported");
  if (z == 0.0)
    return 1.0;

  // large |z|: expansion in 1/z, unless a - b is an integer (log case)
  const double ab = a - b;
  if (z < -10.0 && std::abs(ab - std::round(ab)) > 1e-6) {
    const double u = 1.0 / z;
    auto coef = [&](double p, double q) {
      return std::tgamma(c) * std::tgamma(q - p) / (std::tgamma(q) * std::tgamma(c - p));
    };
    const double t1 = coef(a, b) * std::pow(-z, -a) * hyp2f1_small(a, a - c + 1.0, ab + 1.0, u);
    const double t2 = coef(b, a) * std::pow(-z, -b) * hyp2f1_small(b, b - c + 1.0, 1.0 - ab, u);
    return t1 + t2;
  }

  // Pfaff: 2F1(a,b;c;z) = (1-z)^{-a} 2F1(a, c-b; c; z/(z-1))
  const double w = z / (z - 1.0);
  const double bb = c - b;
  const double prefactor = std::pow(1.0 - z, -a);

  double term = 1.0;
  double sum = 1.0;
  constexpr long kMaxTerms = 20'000'000;
  for (long n = 0; n < kMaxTerms; ++n) {
    const double num = (a + n) * (bb + n);
    if (num == 0.0)
      return prefactor * sum; // terminating series
    term *= num / ((c + n) * (n + 1.0)) * w;
    sum += term;
    // geometric remainder bound once terms settle into ratio ~ w
    if (n > 4 && std::abs(term) <= 1e-17 * (1.0 - w) * std::abs(sum))
      return prefactor * sum;
  }
  throw NumericError("hyp2f1: series did not converge (|z| too large)");
}

double binomial(int n, int k) {
  if (k < 0 || k > n)
    return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (int i = 1; i <= k; ++i)
    r = r * (n - k + i) / i;
  return std::round(r);
}

double normal_quantile(double p) {
  if (!(p > 0 && p < 1))
    throw ParameterError("normal_quantile: p must lie in (0,1)");
  auto cdf = [p](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)) - p; };
  return find_root_monotone(cdf, -40.0, 40.0, 1e-13);
}

GaussRule gauss_legendre(int n) {
  if (n < 1)
    throw ParameterError("gauss_legendre: n must be >= 1");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double beta = k / std::sqrt(4.0 * k * k - 1.0);
    jacobi(k - 1, k) = beta;
    jacobi(k, k - 1) = beta;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  GaussRule rule;
  rule.nodes = es.eigenvalues();
  rule.weights = 2.0 * es.eigenvectors().row(0).transpose().array().square();
  return rule;
}

double find_root_monotone(const std::function<double(double)> &f, double lo,
                          double hi, double tol) {
  double a = lo, b = hi;
  double fa = f(a), fb = f(b);
  if (fa == 0.0)
    return a;
  if (fb == 0.0)
    return b;
  if (!(fa * fb < 0.0))
    throw BracketError("find_root_monotone: no sign change on bracket");

  double c = a, fc = fa, d = b - a, e = d;
  for (int iter = 0; iter < 300; ++iter) {
    if ((fb > 0) == (fc > 0)) {
      c = a;
      fc = fa;
      d = e = b - a;
    }
    if (std::abs(fc) < std::abs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    const double tol1 = 2.0 * 2.2e-16 * std::abs(b) + 0.5 * tol;
    const double xm = 0.5 * (c - b);
    if (std::abs(xm) <= tol1 || fb == 0.0)
      return b;
    if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
      double p, q, r;
      const double s = fb / fa;
      if (a == c) {
        p = 2.0 * xm * s;
        q = 1.0 - s;
      } else {
        q = fa / fc;
        r = fb / fc;
        p = s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0));
        q = (q - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0)
        q = -q;
      p = std::abs(p);
      if (2.0 * p < std::min(3.0 * xm * q - std::abs(tol1 * q),
                             std::abs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = xm;
        e = d;
      }
    } else {
      d = xm;
      e = d;
    }
    a = b;
    fa = fb;
    b += std::abs(d) > tol1 ? d : (xm > 0 ? tol1 : -tol1);
    fb = f(b);
  }
  throw NumericError("find_root_monotone: iteration limit reached");
}

int poisson_truncation(double mean, const TruncationBudget &budget) {
  budget.validate();
  if (!(mean >= 0) || !std::isfinite(mean))
    throw ParameterError("poisson_truncation: mean must be finite and >= 0");
  if (mean == 0.0)
    return 0;
  const double target = 1.0 - budget.tail_mass;
  const double log_mean = std::log(mean);
  double cdf = 0.0;
  for (int n = 0; n <= budget.max_terms_per_sum; ++n) {
    cdf += std::exp(-mean + n * log_mean - std::lgamma(n + 1.0));
    if (cdf >= target)
      return n;
  }
  throw TruncationError("poisson_truncation: term budget exceeded", cdf);
}

Interval wilson_interval(std::uint64_t successes, std::uint64_t trials,
                         double confidence) {
  if (trials == 0)
    return {0.0, 1.0};
  const double z = normal_quantile(0.5 + 0.5 * confidence);
  const double n = double(trials);
  const double p = double(successes) / n;
  const double z2 = z * z;
  const double centre = (p + z2 / (2 * n)) / (1 + z2 / n);
  const double half =
      z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / (1 + z2 / n);
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

} // namespace udn
