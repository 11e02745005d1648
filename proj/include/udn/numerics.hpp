#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace udn {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ParameterError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Adaptive quadrature ran out of subdivisions; carries the best estimate.
class ConvergenceError : public NumericError {
public:
  ConvergenceError(const std::string &what, double best, double bound)
      : NumericError(what), best_estimate(best), error_bound(bound) {}
  double best_estimate;
  double error_bound;
};

class BracketError : public NumericError {
public:
  using NumericError::NumericError;
};

class TruncationError : public NumericError {
public:
  TruncationError(const std::string &what, double mass)
      : NumericError(what), achieved_mass(mass) {}
  double achieved_mass;
};

// ---------------------------------------------------------------------------
// Tolerance bundles
// ---------------------------------------------------------------------------

enum class TailPolicy { transform, truncate_at_negligible };

struct QuadSpec {
  double abs_tol = 1e-9;
  double rel_tol = 1e-7;
  int max_subdivisions = 400;
  TailPolicy tail_policy = TailPolicy::transform;
  //! Length scale of the map t = lo + scale * u / (1 - u) used for [lo, inf).
  double tail_scale = 1.0;

  void validate() const {
    if (!(abs_tol > 0) || !(rel_tol > 0) || max_subdivisions < 1 ||
        !(tail_scale > 0))
      throw ParameterError("QuadSpec: tolerances and scale must be positive, "
                           "max_subdivisions >= 1");
  }
  QuadSpec with_scale(double s) const {
    QuadSpec q = *this;
    q.tail_scale = s;
    return q;
  }
};

struct TruncationBudget {
  double tail_mass = 1e-4;
  int max_terms_per_sum = 256;

  void validate() const {
    if (!(tail_mass > 0 && tail_mass < 1))
      throw ParameterError("TruncationBudget: tail_mass must lie in (0,1)");
    if (max_terms_per_sum < 1)
      throw ParameterError("TruncationBudget: max_terms_per_sum must be >= 1");
  }
};

template <typename T> struct Estimate {
  T value;
  double error;
};

// ---------------------------------------------------------------------------
// Special functions
// ---------------------------------------------------------------------------

inline double erf(double x) { return std::erf(x); }

double gamma_fn(double x);

//! gamma(a, x) = int_0^x t^{a-1} e^{-t} dt
double lower_incomplete_gamma(double a, double x);

//! Q(a, x) = Gamma(a, x) / Gamma(a)
double regularized_upper_gamma(double a, double x);

//! P(a, x) = 1 - Q(a, x)
double regularized_lower_gamma(double a, double x);

//! Gauss hypergeometric 2F1(a, b; c; z) on z <= 0. The argument is mapped into
//! [0, 1) with the Pfaff transformation before the power series is summed.
double hyp2f1(double a, double b, double c, double z);

//! Binomial coefficient as a double (exact for the small arguments used here).
double binomial(int n, int k);

//! Standard normal quantile.
double normal_quantile(double p);

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

namespace detail {

inline double component_excess(double value, double error, const QuadSpec &q) {
  return error / std::max(q.abs_tol, q.rel_tol * std::abs(value));
}

template <typename Derived>
double component_excess(const Eigen::ArrayBase<Derived> &value,
                        const Eigen::ArrayBase<Derived> &error,
                        const QuadSpec &q) {
  return (error / (q.rel_tol * value.abs()).max(q.abs_tol)).maxCoeff();
}

inline double magnitude(double v) { return std::abs(v); }
template <typename Derived>
double magnitude(const Eigen::ArrayBase<Derived> &v) {
  return v.abs().maxCoeff();
}

template <typename T, typename = void> struct plain_of {
  using type = T;
};
template <typename T> struct plain_of<T, std::void_t<typename T::PlainObject>> {
  using type = typename T::PlainObject;
};
template <typename F>
using quad_value_t = typename plain_of<std::decay_t<std::invoke_result_t<F &, double>>>::type;

template <typename T> struct Segment {
  double a, b;
  T value;
  T error;
  double excess;
  bool operator<(const Segment &o) const { return excess < o.excess; }
};

// 15-point Kronrod extension of the 7-point Gauss rule.
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <typename F>
auto gk15(F &f, double a, double b) {
  using T = quad_value_t<F>;
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  T fc = f(c);
  T kron = fc * kWgk[7];
  T gauss = fc * kWg[3];
  for (int i = 0; i < 7; ++i) {
    const double dx = h * kXgk[i];
    T f1 = f(c - dx);
    T f2 = f(c + dx);
    kron = kron + (f1 + f2) * kWgk[i];
    if (i % 2 == 1)
      gauss = gauss + (f1 + f2) * kWg[i / 2];
  }
  T value = kron * h;
  T err = value - gauss * h;
  if constexpr (std::is_arithmetic_v<T>) {
    err = std::abs(err);
  } else {
    err = err.abs();
  }
  return std::pair<T, T>{value, err};
}

template <typename F>
auto adaptive_finite(F &f, double a, double b, const QuadSpec &q) {
  using T = quad_value_t<F>;
  std::priority_queue<Segment<T>> heap;
  auto [v0, e0] = gk15(f, a, b);
  T total = v0;
  T total_err = e0;
  heap.push({a, b, v0, e0, component_excess(v0, e0, q)});
  int splits = 0;
  while (component_excess(total, total_err, q) > 1.0) {
    if (splits >= q.max_subdivisions) {
      throw ConvergenceError("integrate_1d: subdivision budget exhausted",
                             magnitude(total), magnitude(total_err));
    }
    Segment<T> s = heap.top();
    heap.pop();
    const double m = 0.5 * (s.a + s.b);
    if (!(m > s.a && m < s.b)) {
      // interval at machine resolution; accept what we have
      break;
    }
    auto [vl, el] = gk15(f, s.a, m);
    auto [vr, er] = gk15(f, m, s.b);
    total = total - s.value + vl + vr;
    total_err = total_err - s.error + el + er;
    if constexpr (!std::is_arithmetic_v<T>) {
      total_err = total_err.max(0.0);
    } else {
      total_err = std::max(total_err, 0.0);
    }
    heap.push({s.a, m, vl, el, component_excess(vl, el, q)});
    heap.push({m, s.b, vr, er, component_excess(vr, er, q)});
    ++splits;
  }
  return Estimate<T>{total, magnitude(total_err)};
}

} // namespace detail

/// Adaptive Gauss-Kronrod integration of f over [lo, hi]; hi may be +infinity.
/// f may return a double or an Eigen array (all components share the
/// subdivision and must each meet the tolerance).
template <typename F>
auto integrate_1d(F &&f, double lo, double hi, const QuadSpec &q = {}) {
  using T = detail::quad_value_t<F>;
  q.validate();
  if (!(hi > lo)) {
    if (hi == lo) {
      T z = T(f(lo)) * 0.0;
      return Estimate<T>{z, 0.0};
    }
    throw ParameterError("integrate_1d: hi < lo");
  }
  if (std::isfinite(hi))
    return detail::adaptive_finite(f, lo, hi, q);

  const double scale = q.tail_scale;
  if (q.tail_policy == TailPolicy::transform) {
    auto g = [&](double u) -> T {
      const double w = 1.0 - u;
      const double t = lo + scale * u / w;
      return f(t) * (scale / (w * w));
    };
    return detail::adaptive_finite(g, 0.0, 1.0, q);
  }
  // truncate_at_negligible: geometric panels until one contributes nothing
  Estimate<T> acc = detail::adaptive_finite(f, lo, lo + scale, q);
  double a = lo + scale, width = scale;
  for (int panel = 0; panel < 200; ++panel) {
    auto part = detail::adaptive_finite(f, a, a + width, q);
    acc.value = acc.value + part.value;
    acc.error += part.error;
    if (detail::magnitude(part.value) <=
        std::max(q.abs_tol, q.rel_tol * detail::magnitude(acc.value)))
      return acc;
    a += width;
    width *= 2.0;
  }
  throw ConvergenceError("integrate_1d: tail did not become negligible",
                         detail::magnitude(acc.value), acc.error);
}

/// Gauss-Legendre nodes and weights on [-1, 1] (Golub-Welsch).
struct GaussRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};
GaussRule gauss_legendre(int n);

// ---------------------------------------------------------------------------
// Root finding
// ---------------------------------------------------------------------------

/// Brent's method on a bracket with a sign change. tol is on the argument.
double find_root_monotone(const std::function<double(double)> &f, double lo,
                          double hi, double tol);

// ---------------------------------------------------------------------------
// Truncated sums
// ---------------------------------------------------------------------------

/// Smallest n with P(X <= n) >= 1 - tail_mass for X ~ Poisson(mean).
int poisson_truncation(double mean, const TruncationBudget &budget = {});

// ---------------------------------------------------------------------------
// Streaming statistics
// ---------------------------------------------------------------------------

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  void merge(const CompensatedSum &o) {
    add(o.sum_);
    add(o.comp_);
  }
  double value() const { return sum_ + comp_; }

private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Count, mean and variance accumulated from first and second moments.
class RunningStats {
public:
  void add(double x) {
    ++n_;
    s1_.add(x);
    s2_.add(x * x);
  }
  void merge(const RunningStats &o) {
    n_ += o.n_;
    s1_.merge(o.s1_);
    s2_.merge(o.s2_);
  }
  std::uint64_t count() const { return n_; }
  double mean() const { return n_ ? s1_.value() / double(n_) : 0.0; }
  double variance() const {
    if (n_ < 2)
      return 0.0;
    const double m = mean();
    const double v = (s2_.value() - double(n_) * m * m) / double(n_ - 1);
    return std::max(v, 0.0);
  }
  double std_error() const {
    return n_ ? std::sqrt(variance() / double(n_)) : 0.0;
  }

private:
  std::uint64_t n_ = 0;
  CompensatedSum s1_, s2_;
};

struct Interval {
  double lo;
  double hi;
};

/// Wilson score interval for a binomial proportion.
Interval wilson_interval(std::uint64_t successes, std::uint64_t trials,
                         double confidence = 0.95);

} // namespace udn
