#include "udn/analytic.hpp"

#include "udn/channel.hpp"

#include <numbers>

namespace udn {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

double poisson_pmf(int n, double mean) {
  if (mean <= 0)
    return n == 0 ? 1.0 : 0.0;
  return std::exp(n * std::log(mean) - mean - std::lgamma(n + 1.0));
}

double length_scale(const NetworkModel &m, int k) {
  const double lam = m.total_density();
  const double nearest = lam > 0 ? 0.5 / std::sqrt(lam) : 1.0;
  return std::max(m.height_gap(k), nearest);
}

} // namespace

QuadSpec analytic_quad_defaults() {
  QuadSpec q;
  q.abs_tol = 1e-13;
  q.rel_tol = 1e-10;
  q.max_subdivisions = 4000;
  return q;
}

// ---------------------------------------------------------------------------
// Link field and main-link laws
// ---------------------------------------------------------------------------

LinkField::LinkField(const NetworkModel &m) : model_(m) {
  m.validate();
  for (int j = 0; j < m.num_tiers(); ++j)
    profiles_.push_back(los_profile(j, m));
}

double LinkField::theta(int j, LinkClass c, int k, LinkClass co, double r) const {
  const auto &ch = model_.channel;
  const double ac = ch.alpha(c);
  return std::pow(model_.tiers[j].tx_power / model_.tiers[k].tx_power, 1.0 / ac) *
         std::pow(r, ch.alpha(co) / ac);
}

double LinkField::void_mass(int k, LinkClass co, double r) const {
  double s = 0.0;
  for (int j = 0; j < num_tiers(); ++j) {
    const double lam = model_.tiers[j].density;
    if (lam <= 0)
      continue;
    for (LinkClass c : kBothClasses)
      s += lam * profiles_[j].mass(c, theta(j, c, k, co, r));
  }
  return 2.0 * kPi * s;
}

double LinkField::main_density(int k, LinkClass co, double r) const {
  const double lam = model_.tiers[k].density;
  if (lam <= 0 || r < profiles_[k].h)
    return 0.0;
  const double p = profiles_[k].prob(co, r);
  if (p <= 0)
    return 0.0;
  return 2.0 * kPi * lam * r * p * std::exp(-void_mass(k, co, r));
}

std::vector<double> LinkField::kinks(int k, LinkClass co, const Eigen::MatrixXd *eta) const {
  std::vector<double> out;
  const auto &ch = model_.channel;
  for (int j = 0; j < num_tiers(); ++j) {
    if (model_.tiers[j].density <= 0)
      continue;
    for (LinkClass c : kBothClasses) {
      const double ac = ch.alpha(c);
      const double ratio = model_.tiers[k].tx_power / model_.tiers[j].tx_power;
      const double hj = profiles_[j].h;
      // theta_j^c(r) * s^{-1/alpha_c} = h_j
      auto crossing = [&](double s) {
        return std::pow(std::pow(hj, ac) * s * ratio, 1.0 / ch.alpha(co));
      };
      out.push_back(crossing(1.0));
      if (eta)
        out.push_back(crossing((*eta)(j, k)));
    }
  }
  return out;
}

double integrate_with_kinks(const std::function<double(double)> &f, double lo,
                            std::vector<double> kinks, const QuadSpec &q) {
  std::sort(kinks.begin(), kinks.end());
  double total = 0.0;
  double a = lo;
  for (double b : kinks) {
    if (!(b > a) || !std::isfinite(b))
      continue;
    total += integrate_1d(f, a, b, q).value;
    a = b;
  }
  QuadSpec tail = q;
  tail.tail_scale = q.tail_scale;
  return total + integrate_1d(f, a, kInf, tail).value;
}

MainLinkLaw::MainLinkLaw(std::shared_ptr<const LinkField> field, int k, LinkClass co,
                         const QuadSpec &q)
    : field_(std::move(field)), k_(k), co_(co), quad_(q) {
  const NetworkModel &m = field_->model();
  lower_ = m.height_gap(k);
  scale_ = length_scale(m, k);
  quad_.tail_scale = scale_;
  kinks_ = field_->kinks(k, co);
  auto f = [this](double r) { return field_->main_density(k_, co_, r); };
  assoc_ = integrate_with_kinks(f, lower_, kinks_, quad_);
}

double MainLinkLaw::pdf(double r) const {
  if (!(assoc_ > 0) || r < lower_)
    return 0.0;
  return field_->main_density(k_, co_, r) / assoc_;
}

double MainLinkLaw::cdf(double r) const {
  if (!(assoc_ > 0) || r <= lower_)
    return 0.0;
  if (std::isinf(r))
    return 1.0;
  auto f = [this](double x) { return field_->main_density(k_, co_, x); };
  std::vector<double> pts = kinks_;
  std::sort(pts.begin(), pts.end());
  if (r > lower_ + scale_) {
    // far out the mass sits below r; integrate the remaining tail instead
    std::vector<double> beyond;
    for (double b : pts)
      if (b > r)
        beyond.push_back(b);
    const double tail = integrate_with_kinks(f, r, beyond, quad_);
    return std::clamp(1.0 - tail / assoc_, 0.0, 1.0);
  }
  double total = 0.0, a = lower_;
  for (double b : pts) {
    if (!(b > a) || b >= r)
      continue;
    total += integrate_1d(f, a, b, quad_).value;
    a = b;
  }
  total += integrate_1d(f, a, r, quad_).value;
  return std::min(1.0, total / assoc_);
}

double MainLinkLaw::quantile(double v) const {
  if (!(v > 0 && v < 1))
    throw ParameterError("MainLinkLaw::quantile: v must lie in (0,1)");
  if (!(assoc_ > 0))
    throw NumericError("MainLinkLaw::quantile: law has zero mass");
  double hi = lower_ + scale_;
  while (cdf(hi) < v)
    hi = lower_ + 2.0 * (hi - lower_);
  auto g = [&](double r) { return cdf(r) - v; };
  return find_root_monotone(g, lower_, hi, 1e-9 * hi);
}

std::vector<MainLinkLaw> association_law(const NetworkModel &m, const QuadSpec &q) {
  auto field = std::make_shared<const LinkField>(m);
  QuadSpec qq = q;
  qq.abs_tol = std::min(q.abs_tol, 1e-12);
  qq.rel_tol = std::min(q.rel_tol, 1e-9);
  qq.max_subdivisions = std::max(q.max_subdivisions, 2000);
  std::vector<MainLinkLaw> laws;
  for (int k = 0; k < m.num_tiers(); ++k)
    for (LinkClass co : kBothClasses)
      laws.emplace_back(field, k, co, qq);
  return laws;
}

double mean_comp_size_analytic(const NetworkModel &m, const Eigen::MatrixXd &eta,
                               const QuadSpec &q) {
  const int K = m.num_tiers();
  if (eta.rows() != K || eta.cols() != K || !((eta.array() > 0).all() && (eta.array() <= 1).all()))
    throw ParameterError("mean_comp_size_analytic: eta must be K x K with entries in (0,1]");
  const LinkField field(m);
  const auto &ch = m.channel;
  double total = 0.0;
  for (int k = 0; k < K; ++k) {
    for (LinkClass co : kBothClasses) {
      // count of BSs whose ARLP ratio exceeds eta, inner integrals from h_j
      auto f = [&](double r) {
        const double dens = field.main_density(k, co, r);
        if (dens == 0.0)
          return 0.0;
        double inner = 0.0;
        for (int j = 0; j < K; ++j) {
          const double lam = m.tiers[j].density;
          if (lam <= 0)
            continue;
          for (LinkClass c : kBothClasses) {
            const double R =
                std::pow(eta(j, k), -1.0 / ch.alpha(c)) * field.theta(j, c, k, co, r);
            inner += lam * field.profile(j).mass(c, R);
          }
        }
        return dens * 2.0 * kPi * inner;
      };
      total += integrate_with_kinks(f, m.height_gap(k), field.kinks(k, co, &eta),
                                    q.with_scale(length_scale(m, k)));
    }
  }
  return total;
}

Eigen::VectorXd per_tier_comp_size_analytic(const NetworkModel &m, const Eigen::MatrixXd &eta,
                                            const QuadSpec &q) {
  const int K = m.num_tiers();
  const LinkField field(m);
  const auto &ch = m.channel;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(K);
  for (int j = 0; j < K; ++j) {
    for (int k = 0; k < K; ++k) {
      for (LinkClass co : kBothClasses) {
        auto f = [&](double r) {
          const double dens = field.main_density(k, co, r);
          if (dens == 0.0)
            return 0.0;
          double v = j == k ? 1.0 : 0.0;
          const double lam = m.tiers[j].density;
          for (LinkClass c : kBothClasses) {
            const double th = field.theta(j, c, k, co, r);
            const double R = std::pow(eta(j, k), -1.0 / ch.alpha(c)) * th;
            v += 2.0 * kPi * lam *
                 (field.profile(j).mass(c, R) - field.profile(j).mass(c, th));
          }
          return dens * v;
        };
        out[j] += integrate_with_kinks(f, m.height_gap(k), field.kinks(k, co, &eta),
                                       q.with_scale(length_scale(m, k)));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gamma approximation
// ---------------------------------------------------------------------------

namespace {

// E[A^w], w = 0..4, for a unit-power Nakagami amplitude of shape m
std::array<double, 5> amplitude_moments(int m) {
  std::array<double, 5> t{};
  for (int w = 0; w <= 4; ++w)
    t[w] = nakagami_amp_moment(m, w);
  return t;
}

} // namespace

double amplitude_fourth_moment(std::span<const double> coef, std::span<const int> shape) {
  if (coef.size() != shape.size())
    throw ParameterError("amplitude_fourth_moment: size mismatch");
  std::array<double, 5> M{1.0, 0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < coef.size(); ++i) {
    const auto tau = amplitude_moments(shape[i]);
    std::array<double, 5> link{};
    double p = 1.0;
    for (int w = 0; w <= 4; ++w) {
      link[w] = p * tau[w];
      p *= coef[i];
    }
    std::array<double, 5> next{};
    for (int w = 0; w <= 4; ++w)
      for (int a = 0; a <= w; ++a)
        next[w] += binomial(w, a) * M[a] * link[w - a];
    M = next;
  }
  return M[4];
}

GammaApprox gamma_approx_amplitudes(std::span<const double> coef, std::span<const int> shape) {
  if (coef.empty() || coef.size() != shape.size())
    throw ParameterError("gamma_approx: need at least one link and matching shapes");
  GammaApprox g;
  for (std::size_t i = 0; i < coef.size(); ++i) {
    if (!(coef[i] > 0) || shape[i] < 1)
      throw ParameterError("gamma_approx: coefficients must be positive, shapes >= 1");
    const double t1 = nakagami_amp_moment(shape[i], 1);
    g.mu += coef[i] * t1;
    g.omega += coef[i] * coef[i] * (1.0 - t1 * t1);
  }
  g.xi = amplitude_fourth_moment(coef, shape);
  const double second = g.mu * g.mu + g.omega;
  g.omega1 = g.xi - second * second;
  if (!(g.omega1 > 0))
    throw NumericError("gamma_approx: non-positive power variance (degenerate approximation)");
  g.shape = second * second / g.omega1;
  // an exact Gamma power gives an integer shape up to rounding
  const double nearest = std::round(g.shape);
  if (std::abs(g.shape - nearest) <= 1e-9 * nearest)
    g.shape = nearest;
  g.scale = second / g.shape;
  if (!(g.shape < 1e8))
    throw NumericError("gamma_approx: shape parameter too large for the finite sums");
  g.k0_floor = static_cast<int>(std::floor(g.shape));
  g.k0_ceil = static_cast<int>(std::ceil(g.shape));
  return g;
}

GammaApprox gamma_approx(const CoopLink &main, std::span<const CoopLink> cooperators,
                         const NetworkModel &m) {
  std::vector<double> coef;
  std::vector<int> shape;
  auto add = [&](const CoopLink &l) {
    coef.push_back(std::sqrt(m.tiers[l.tier].tx_power) *
                   std::pow(l.distance, -0.5 * m.channel.alpha(l.cls)));
    shape.push_back(m.channel.m(l.cls));
  };
  add(main);
  for (const auto &c : cooperators)
    add(c);
  return gamma_approx_amplitudes(coef, shape);
}

// ---------------------------------------------------------------------------
// Laplace transform of the interference
// ---------------------------------------------------------------------------

InterferenceField interference_field(const NetworkModel &m, const Eigen::MatrixXd &eta, int k,
                                     LinkClass co, double r) {
  const LinkField field(m);
  InterferenceField f;
  for (int j = 0; j < m.num_tiers(); ++j) {
    if (m.tiers[j].density <= 0)
      continue;
    for (LinkClass c : kBothClasses) {
      if (c == LinkClass::los && !m.blockage.los_enabled)
        continue;
      InterfererClass ic;
      ic.tier = j;
      ic.cls = c;
      ic.density = m.tiers[j].density;
      ic.power = m.tiers[j].tx_power;
      ic.alpha = m.channel.alpha(c);
      ic.m = m.channel.m(c);
      ic.profile = field.profile(j);
      const double R = std::pow(eta(j, k), -1.0 / ic.alpha) * field.theta(j, c, k, co, r);
      ic.lower = std::max(R, ic.profile.h);
      f.classes.push_back(ic);
    }
  }
  return f;
}

InterferenceField interference_field_beyond(const NetworkModel &m,
                                            std::span<const double> radius) {
  if (static_cast<int>(radius.size()) != m.num_tiers())
    throw ParameterError("interference_field_beyond: one radius per tier expected");
  InterferenceField f;
  for (int j = 0; j < m.num_tiers(); ++j) {
    if (m.tiers[j].density <= 0)
      continue;
    for (LinkClass c : kBothClasses) {
      if (c == LinkClass::los && !m.blockage.los_enabled)
        continue;
      InterfererClass ic;
      ic.tier = j;
      ic.cls = c;
      ic.density = m.tiers[j].density;
      ic.power = m.tiers[j].tx_power;
      ic.alpha = m.channel.alpha(c);
      ic.m = m.channel.m(c);
      ic.profile = los_profile(j, m);
      ic.lower = std::max(radius[j], ic.profile.h);
      f.classes.push_back(ic);
    }
  }
  return f;
}

namespace {

// Integrates g(z) z p_c(z) over (lower, inf) with z = lower (1-u)^{-q}, where q
// is picked so a z^{1-alpha} tail maps to a bounded integrand.
template <typename G>
auto integrate_class(const InterfererClass &ic, G &&g, const QuadSpec &spec) {
  const double L = ic.lower;
  const double q = std::clamp(2.0 / std::max(ic.alpha - 2.0, 1e-9), 1.0, 8.0);
  auto mapped = [&](double u) {
    const double w = 1.0 - u;
    const double z = L * std::pow(w, -q);
    const double jac = L * q * std::pow(w, -q - 1.0);
    auto v = g(z);
    v *= z * ic.profile.prob(ic.cls, z) * jac;
    return v;
  };
  return integrate_1d(mapped, 0.0, 1.0, spec);
}

} // namespace

Eigen::ArrayXd laplace_log_series(const InterferenceField &f, double s, int n_max,
                                  const QuadSpec &q) {
  if (!(s > 0) || !std::isfinite(s))
    throw ParameterError("laplace_log_series: s must be positive and finite");
  if (n_max < 0)
    throw ParameterError("laplace_log_series: n_max must be >= 0");
  Eigen::ArrayXd d = Eigen::ArrayXd::Zero(n_max + 1);
  for (const auto &ic : f.classes) {
    const double md = ic.m;
    auto g = [&](double z) {
      Eigen::ArrayXd e(n_max + 1);
      const double t = s * ic.power * std::pow(z, -ic.alpha);
      const double lg = md * std::log1p(t / md);
      e[0] = -std::expm1(-lg);
      double en = std::exp(-lg);
      const double ratio = t / (md + t);
      for (int n = 1; n <= n_max; ++n) {
        en *= ratio * (md + n - 1) / n;
        e[n] = en;
      }
      return e;
    };
    const auto est = integrate_class(ic, g, q);
    d += 2.0 * kPi * ic.density * est.value;
  }
  return d;
}

Eigen::ArrayXd laplace_series(const InterferenceField &f, double s, int m_max,
                              const QuadSpec &q) {
  const Eigen::ArrayXd d = laplace_log_series(f, s, m_max, q);
  Eigen::ArrayXd a = Eigen::ArrayXd::Zero(m_max + 1);
  a[0] = std::exp(-d[0]);
  for (int m = 1; m <= m_max; ++m) {
    double acc = 0.0;
    for (int i = 0; i < m; ++i)
      acc += (m - i) * d[m - i] * a[i];
    a[m] = acc / m;
  }
  if (!a.allFinite())
    throw NumericError("laplace_series: recursion overflow");
  return a;
}

Eigen::ArrayXd interference_laplace_derivs(const InterferenceField &f, double s, int m_max,
                                           const QuadSpec &q) {
  const Eigen::ArrayXd a = laplace_series(f, s, m_max, q);
  Eigen::ArrayXd out(m_max + 1);
  double fact = 1.0;
  for (int m = 0; m <= m_max; ++m) {
    if (m > 0)
      fact *= m;
    out[m] = (m % 2 ? -1.0 : 1.0) * a[m] * fact / std::pow(s, m);
  }
  if (!out.allFinite())
    throw NumericError("interference_laplace_derivs: overflow");
  return out;
}

double interference_mean(const InterferenceField &f, const QuadSpec &q) {
  double total = 0.0;
  for (const auto &ic : f.classes) {
    auto g = [&](double z) { return ic.power * std::pow(z, -ic.alpha); };
    total += 2.0 * kPi * ic.density * integrate_class(ic, g, q).value;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Conditional coverage
// ---------------------------------------------------------------------------

namespace {

// Odometer over per-sum counts 0..limit[q].
bool next_config(std::vector<int> &n, const std::vector<int> &limit) {
  for (std::size_t q = 0; q < n.size(); ++q) {
    if (n[q] < limit[q]) {
      ++n[q];
      return true;
    }
    n[q] = 0;
  }
  return false;
}

struct BracketAccumulator {
  CompensatedSum lower, upper;
  double variance = 0.0;
};

} // namespace

std::vector<CoverageBracket>
conditional_coverage(double r, int k, LinkClass co, std::span<const double> thresholds,
                     const NetworkModel &m, const Eigen::MatrixXd &eta,
                     const ConditionalOptions &opt, Rng &rng) {
  const int K = m.num_tiers();
  if (k < 0 || k >= K)
    throw ParameterError("conditional_coverage: tier index out of range");
  if (!(r >= m.height_gap(k)))
    throw ParameterError("conditional_coverage: main-link distance below h_k");
  for (double t : thresholds)
    if (!(t >= 0))
      throw ParameterError("conditional_coverage: thresholds must be >= 0");
  opt.budget.validate();

  const LinkField field(m);
  const auto &ch = m.channel;
  const int Q = 2 * K;

  std::vector<double> lo(Q), hi(Q), g_lo(Q), g_hi(Q), mean(Q, 0.0);
  std::vector<int> limit(Q, 0);
  TruncationBudget per_sum = opt.budget;
  per_sum.tail_mass = opt.budget.tail_mass / Q;
  for (int j = 0; j < K; ++j) {
    for (LinkClass c : kBothClasses) {
      const int q = 2 * j + index_of(c);
      const double th = field.theta(j, c, k, co, r);
      const double R = std::pow(eta(j, k), -1.0 / ch.alpha(c)) * th;
      const LosProfile &p = field.profile(j);
      lo[q] = std::max(th, p.h);
      hi[q] = std::max(R, p.h);
      g_lo[q] = p.mass(c, lo[q]);
      g_hi[q] = p.mass(c, hi[q]);
      mean[q] = 2.0 * kPi * m.tiers[j].density * std::max(g_hi[q] - g_lo[q], 0.0);
      if (mean[q] > 0)
        limit[q] = poisson_truncation(mean[q], per_sum);
    }
  }

  const InterferenceField interf = interference_field(m, eta, k, co, r);
  const double main_coef = std::sqrt(m.tiers[k].tx_power) * std::pow(r, -0.5 * ch.alpha(co));

  const std::size_t T = thresholds.size();
  std::vector<BracketAccumulator> acc(T);
  std::vector<double> coef;
  std::vector<int> shape;
  std::vector<double> lo_val(T), up_val(T);

  auto evaluate = [&]() {
    const GammaApprox g = gamma_approx_amplitudes(coef, shape);
    for (std::size_t t = 0; t < T; ++t) {
      if (thresholds[t] == 0.0) {
        lo_val[t] = up_val[t] = 1.0;
        continue;
      }
      const double s = thresholds[t] / g.scale;
      const int m_max = std::max(g.k0_ceil - 1, 0);
      const Eigen::ArrayXd a = laplace_series(interf, s, m_max, opt.quad);
      lo_val[t] = a.head(g.k0_floor).sum();
      up_val[t] = a.head(g.k0_ceil).sum();
    }
  };

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<int> n(Q, 0);
  CompensatedSum enumerated;
  do {
    double w = 1.0;
    int total = 0;
    for (int q = 0; q < Q; ++q) {
      w *= poisson_pmf(n[q], mean[q]);
      total += n[q];
    }
    if (w == 0.0)
      continue;
    enumerated.add(w);

    auto reset = [&]() {
      coef.assign(1, main_coef);
      shape.assign(1, ch.m(co));
    };
    if (total == 0) {
      reset();
      evaluate();
      for (std::size_t t = 0; t < T; ++t) {
        acc[t].lower.add(w * lo_val[t]);
        acc[t].upper.add(w * up_val[t]);
      }
      continue;
    }

    const long samples =
        std::max(1L, std::lround(w * static_cast<double>(opt.inner_samples)));
    std::vector<RunningStats> lo_stats(T), up_stats(T), mid_stats(T);
    for (long smp = 0; smp < samples; ++smp) {
      reset();
      for (int q = 0; q < Q; ++q) {
        const int j = q / 2;
        const LinkClass c = static_cast<LinkClass>(q % 2);
        const LosProfile &p = field.profile(j);
        for (int i = 0; i < n[q]; ++i) {
          const double target = g_lo[q] + unif(rng) * (g_hi[q] - g_lo[q]);
          const double x = std::clamp(p.mass_inverse(c, target), lo[q], hi[q]);
          coef.push_back(std::sqrt(m.tiers[j].tx_power) * std::pow(x, -0.5 * ch.alpha(c)));
          shape.push_back(ch.m(c));
        }
      }
      evaluate();
      for (std::size_t t = 0; t < T; ++t) {
        lo_stats[t].add(lo_val[t]);
        up_stats[t].add(up_val[t]);
        mid_stats[t].add(0.5 * (lo_val[t] + up_val[t]));
      }
    }
    for (std::size_t t = 0; t < T; ++t) {
      acc[t].lower.add(w * lo_stats[t].mean());
      acc[t].upper.add(w * up_stats[t].mean());
      // one sample: the largest variance a [0,1] value with this mean can have
      const double mu = mid_stats[t].mean();
      const double var = samples > 1 ? mid_stats[t].variance() : mu * (1.0 - mu);
      acc[t].variance += w * w * var / static_cast<double>(samples);
    }
  } while (next_config(n, limit));

  const double missing = std::max(0.0, 1.0 - enumerated.value());
  std::vector<CoverageBracket> out(T);
  for (std::size_t t = 0; t < T; ++t) {
    CoverageBracket &b = out[t];
    if (thresholds[t] == 0.0) {
      b.lower = b.upper = 1.0;
      continue;
    }
    b.lower = acc[t].lower.value();
    b.upper = acc[t].upper.value() + missing;
    b.mc_error = std::sqrt(acc[t].variance);
    if (b.mc_error > opt.widen_threshold) {
      b.widened = true;
      b.lower -= 3.0 * b.mc_error;
      b.upper += 3.0 * b.mc_error;
    }
    b.lower = std::clamp(b.lower, 0.0, 1.0);
    b.upper = std::clamp(b.upper, b.lower, 1.0);
  }
  return out;
}

CoverageBracket conditional_coverage(double r, int k, LinkClass co, double threshold,
                                     const NetworkModel &m, const Eigen::MatrixXd &eta,
                                     const ConditionalOptions &opt, std::uint64_t seed) {
  Rng rng = substream(seed, 0);
  const double t[1] = {threshold};
  return conditional_coverage(r, k, co, t, m, eta, opt, rng)[0];
}

namespace {

// Quantile-space composite Gauss-Legendre nodes on (0, 1).
std::vector<std::pair<double, double>> quantile_nodes(const OuterRule &rule) {
  if (rule.panels < 1 || rule.nodes_per_panel < 1)
    throw ParameterError("OuterRule: panels and nodes must be >= 1");
  const GaussRule g = gauss_legendre(rule.nodes_per_panel);
  std::vector<std::pair<double, double>> out;
  const double width = 1.0 / rule.panels;
  for (int p = 0; p < rule.panels; ++p) {
    const double a = p * width;
    for (int i = 0; i < rule.nodes_per_panel; ++i)
      out.emplace_back(a + 0.5 * width * (g.nodes[i] + 1.0), 0.5 * width * g.weights[i]);
  }
  return out;
}

} // namespace

CoverageResult coverage_analytic(const NetworkModel &m, const Eigen::MatrixXd &eta,
                                 std::span<const double> thresholds,
                                 const AnalyticOptions &opt) {
  const auto laws = association_law(m, opt.quad);
  const auto nodes = quantile_nodes(opt.outer);
  const std::size_t T = thresholds.size();
  std::vector<CompensatedSum> lo(T), up(T);
  std::vector<double> var(T, 0.0);
  std::vector<bool> widened(T, false);
  double mass = 0.0;
  std::uint64_t stream = 0;
  for (const auto &law : laws) {
    mass += law.assoc_prob();
    if (!(law.assoc_prob() > 1e-14)) {
      stream += nodes.size();
      continue;
    }
    for (const auto &[v, w] : nodes) {
      const double r = law.quantile(v);
      Rng rng = substream(opt.seed, stream++, 0x636f76);
      const auto br = conditional_coverage(r, law.tier(), law.link_class(), thresholds, m, eta,
                                           opt.inner, rng);
      const double weight = law.assoc_prob() * w;
      for (std::size_t t = 0; t < T; ++t) {
        lo[t].add(weight * br[t].lower);
        up[t].add(weight * br[t].upper);
        var[t] += weight * weight * br[t].mc_error * br[t].mc_error;
        widened[t] = widened[t] || br[t].widened;
      }
    }
  }
  CoverageResult res;
  res.assoc_mass_error = std::abs(mass - 1.0);
  for (std::size_t t = 0; t < T; ++t) {
    CoverageBracket b;
    b.lower = std::clamp(lo[t].value(), 0.0, 1.0);
    b.upper = std::clamp(up[t].value(), b.lower, 1.0);
    b.mc_error = std::sqrt(var[t]);
    b.widened = widened[t];
    res.brackets.push_back(b);
  }
  return res;
}

CoverageBracket coverage_analytic(const NetworkModel &m, const Eigen::MatrixXd &eta,
                                  double threshold, const AnalyticOptions &opt) {
  const double t[1] = {threshold};
  return coverage_analytic(m, eta, t, opt).brackets[0];
}

// ---------------------------------------------------------------------------
// All-NLoS Rayleigh special case
// ---------------------------------------------------------------------------

namespace {

void check_special_case(const NetworkModel &m) {
  if (m.blockage.los_enabled)
    throw ParameterError("special case needs an all-NLoS network (los_model none)");
  if (m.channel.m_nlos != 1)
    throw ParameterError("special case needs Rayleigh fading (m_nlos = 1)");
  if (!(m.channel.alpha_nlos > 2))
    throw ParameterError("special case needs alpha > 2");
}

} // namespace

double laplace_nlos_rayleigh(const NetworkModel &m, std::span<const double> lower, double s) {
  const double a = m.channel.alpha_nlos;
  const double b = 1.0 - 2.0 / a;
  double expo = 0.0;
  for (int j = 0; j < m.num_tiers(); ++j) {
    const double lam = m.tiers[j].density;
    if (lam <= 0)
      continue;
    const double L = std::max(lower[j], m.height_gap(j));
    const double sp = s * m.tiers[j].tx_power;
    expo += kPi * lam * (2.0 / a) * sp * std::pow(L, 2.0 - a) / b *
            hyp2f1(1.0, b, 1.0 + b, -sp * std::pow(L, -a));
  }
  return std::exp(-expo);
}

Estimate<double> special_case_conditional(double r, int k, double threshold,
                                          const NetworkModel &m, const Eigen::MatrixXd &eta,
                                          const SpecialCaseOptions &opt, Rng &rng) {
  check_special_case(m);
  const int K = m.num_tiers();
  const double a = m.channel.alpha_nlos;
  std::vector<double> lo(K), hi(K), mean(K, 0.0);
  std::vector<int> limit(K, 0);
  TruncationBudget per_sum = opt.budget;
  per_sum.tail_mass = opt.budget.tail_mass / K;
  for (int j = 0; j < K; ++j) {
    const double nu = std::pow(m.tiers[j].tx_power / m.tiers[k].tx_power, 1.0 / a);
    const double h = m.height_gap(j);
    lo[j] = std::max(nu * r, h);
    hi[j] = std::max(std::pow(eta(j, k), -1.0 / a) * nu * r, h);
    mean[j] = kPi * m.tiers[j].density * (hi[j] * hi[j] - lo[j] * lo[j]);
    if (mean[j] > 0)
      limit[j] = poisson_truncation(mean[j], per_sum);
  }
  const double main_power = m.tiers[k].tx_power * std::pow(r, -a);
  if (threshold == 0.0)
    return {1.0, 0.0};

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<int> n(K, 0);
  CompensatedSum value, enumerated;
  double variance = 0.0;
  do {
    double w = 1.0;
    int total = 0;
    for (int j = 0; j < K; ++j) {
      w *= poisson_pmf(n[j], mean[j]);
      total += n[j];
    }
    if (w == 0.0)
      continue;
    enumerated.add(w);
    if (total == 0) {
      value.add(w * laplace_nlos_rayleigh(m, hi, threshold / main_power));
      continue;
    }
    const long samples = std::max(1L, std::lround(w * opt.inner_samples));
    RunningStats st;
    for (long smp = 0; smp < samples; ++smp) {
      double beta = main_power;
      for (int j = 0; j < K; ++j) {
        for (int i = 0; i < n[j]; ++i) {
          const double x = std::sqrt(lo[j] * lo[j] + unif(rng) * (hi[j] * hi[j] - lo[j] * lo[j]));
          beta += m.tiers[j].tx_power * std::pow(x, -a);
        }
      }
      st.add(laplace_nlos_rayleigh(m, hi, threshold / beta));
    }
    value.add(w * st.mean());
    const double mu = st.mean();
    variance += w * w * (samples > 1 ? st.variance() : mu * (1.0 - mu)) / samples;
  } while (next_config(n, limit));
  const double missing = std::max(0.0, 1.0 - enumerated.value());
  return {value.value(), std::sqrt(variance) + missing};
}

Estimate<double> coverage_special_case(const NetworkModel &m, double threshold,
                                       const Eigen::MatrixXd &eta,
                                       const SpecialCaseOptions &opt) {
  check_special_case(m);
  const auto laws = association_law(m, opt.quad);
  const auto nodes = quantile_nodes(opt.outer);
  CompensatedSum total;
  double var = 0.0;
  std::uint64_t stream = 0;
  for (const auto &law : laws) {
    if (law.link_class() != LinkClass::nlos || !(law.assoc_prob() > 1e-14)) {
      stream += nodes.size();
      continue;
    }
    for (const auto &[v, w] : nodes) {
      const double r = law.quantile(v);
      Rng rng = substream(opt.seed, stream++, 0x6c656d);
      const auto est = special_case_conditional(r, law.tier(), threshold, m, eta, opt, rng);
      const double weight = law.assoc_prob() * w;
      total.add(weight * est.value);
      var += weight * weight * est.error * est.error;
    }
  }
  return {std::clamp(total.value(), 0.0, 1.0), std::sqrt(var)};
}

// ---------------------------------------------------------------------------
// Spectral efficiency
// ---------------------------------------------------------------------------

double layer_cake_se(const std::function<double(double)> &coverage, double threshold,
                     const QuadSpec &q) {
  if (!(threshold >= 0))
    throw ParameterError("layer_cake_se: threshold must be >= 0");
  const double v0 = std::log1p(threshold);
  auto g = [&](double v) { return coverage(std::expm1(v)); };
  QuadSpec qq = q;
  qq.tail_scale = 1.0;
  const double tail = integrate_1d(g, v0, kInf, qq).value;
  return (std::log2(1.0 + threshold) * coverage(threshold) + tail / std::numbers::ln2);
}

LayerCakeRule layer_cake_rule(double threshold, double log_span, int panels,
                              int nodes_per_panel) {
  if (!(threshold >= 0) || !(log_span > 0) || panels < 1 || nodes_per_panel < 1)
    throw ParameterError("layer_cake_rule: invalid arguments");
  const GaussRule g = gauss_legendre(nodes_per_panel);
  const double v0 = std::log1p(threshold);
  const double width = log_span / panels;
  LayerCakeRule rule;
  for (int p = 0; p < panels; ++p) {
    const double a = v0 + p * width;
    for (int i = 0; i < nodes_per_panel; ++i) {
      const double v = a + 0.5 * width * (g.nodes[i] + 1.0);
      rule.nodes.push_back(std::expm1(v));
      rule.weights.push_back(0.5 * width * g.weights[i] / std::numbers::ln2);
    }
  }
  return rule;
}

RxAseResult rx_ase_analytic(const NetworkModel &m, const Eigen::MatrixXd &eta, double threshold,
                            const AnalyticOptions &opt) {
  const LayerCakeRule rule = layer_cake_rule(threshold);
  std::vector<double> t;
  t.push_back(threshold);
  t.insert(t.end(), rule.nodes.begin(), rule.nodes.end());
  const CoverageResult cov = coverage_analytic(m, eta, t, opt);
  RxAseResult res;
  const double head = std::log2(1.0 + threshold);
  res.per_user_se_lower = head * cov.brackets[0].lower;
  res.per_user_se_upper = head * cov.brackets[0].upper;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    res.per_user_se_lower += rule.weights[i] * cov.brackets[i + 1].lower;
    res.per_user_se_upper += rule.weights[i] * cov.brackets[i + 1].upper;
  }
  res.per_user_se = 0.5 * (res.per_user_se_lower + res.per_user_se_upper);
  res.rx_ase = m.user_density * res.per_user_se;
  return res;
}

} // namespace udn
