#include "udn/acceptance.hpp"

#include "udn/analytic.hpp"
#include "udn/association.hpp"
#include "udn/channel.hpp"
#include "udn/report.hpp"
#include "udn/sim_engine.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>

namespace udn::acceptance {

namespace {

constexpr double kPi = std::numbers::pi;

const double kDensities[] = {1e-5, 1e-4, 1e-3, 5e-3, 1e-2, 5e-2};
// published eta (dB) for N_avg = 2 and 3 at the densities above
const double kEtaTableDb[2][6] = {{-7.70, -5.85, -4.56, -1.74, -1.02, -0.22},
                                  {-12.22, -9.20, -7.96, -3.19, -1.92, -0.43}};

std::string fmt(const char *f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char *f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::string fmt(const char *f, double a, double b, double c) {
  char buf[200];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

struct Budget {
  std::int64_t nominal; // trial count named by a criterion
  double points;        // cap on expected sampled points per run
  std::int64_t floor;
};

Budget budget_for(Level l) {
  return l == Level::full ? Budget{100000, 4e8, 4000} : Budget{20000, 1.5e7, 500};
}

std::int64_t trials_for(const NetworkModel &m, double radius, const Budget &b) {
  const double pts = std::max(1.0, m.total_density() * kPi * radius * radius);
  const auto cap = static_cast<std::int64_t>(b.points / pts);
  return std::clamp(cap, b.floor, b.nominal);
}

class Context {
public:
  Context(const NetworkModel &base, const Options &opt)
      : base_(base), opt_(opt), budget_(budget_for(opt.level)) {}

  const NetworkModel &base() const { return base_; }
  const Options &opt() const { return opt_; }
  const Budget &budget() const { return budget_; }

  NetworkModel at(double lambda) const { return with_total_density(base_, lambda); }

  // calibrated scalar eta for the base network, cached per (density, target)
  double eta(double lambda, int target) {
    for (const auto &c : cache_)
      if (c.lambda == lambda && c.target == target)
        return c.eta;
    const CalibrationResult r = calibrate_eta(at(lambda), target);
    cache_.push_back({lambda, target, r.eta});
    return r.eta;
  }

  // Simulation with the sentinel rule: any trial without interferers triggers
  // a larger window.
  std::vector<MetricsReport> mc(const NetworkModel &m, std::span<const CompPolicy> pol,
                                std::span<const double> thr, std::int64_t trials,
                                std::uint64_t salt) const {
    SimConfig cfg;
    cfg.trials = trials;
    cfg.seed = splitmix64(opt_.seed ^ salt);
    cfg.workers = opt_.workers;
    std::vector<MetricsReport> rep;
    for (int attempt = 0; attempt < 4; ++attempt) {
      rep = simulate(m, pol, thr, cfg);
      std::uint64_t worst = 0;
      for (const auto &r : rep)
        worst = std::max(worst, r.sentinel_trials);
      if (static_cast<double>(worst) < 1e-6 * static_cast<double>(trials))
        break;
      cfg.window_radius = 1.5 * rep.front().window_radius;
    }
    return rep;
  }

private:
  struct Cached {
    double lambda;
    int target;
    double eta;
  };
  NetworkModel base_;
  Options opt_;
  Budget budget_;
  std::vector<Cached> cache_;
};

bool comp_tiers_are_ppp(const NetworkModel &m) {
  return std::all_of(m.tiers.begin(), m.tiers.end(),
                     [](const TierParams &t) { return t.deployment == Deployment::ppp; });
}

MeanWithCi comp_size_mc(const NetworkModel &m, double eta, std::int64_t trials,
                        std::uint64_t seed, double confidence,
                        std::vector<std::uint64_t> *hist = nullptr) {
  const CompPolicy p = CompPolicy::rrlp(m.num_tiers(), eta);
  const double radius = comp_tiers_are_ppp(m)
                            ? 0.0
                            : comp_window_radius(m, Eigen::MatrixXd::Constant(
                                                        m.num_tiers(), m.num_tiers(), eta));
  return mean_comp_size_mc(m, p, radius, trials, seed, confidence, hist);
}

// ---------------------------------------------------------------------------

Verdict eta_table(Context &ctx) {
  Verdict v;
  v.name = "eta table";
  int ok = 0;
  double worst = 0.0;
  for (int n = 0; n < 2; ++n) {
    for (int i = 0; i < 6; ++i) {
      const double db = ratio_to_db(ctx.eta(kDensities[i], n + 2));
      const double diff = db - kEtaTableDb[n][i];
      worst = std::max(worst, std::abs(diff));
      ok += std::abs(diff) <= 0.15;
      v.values.emplace_back(fmt("eta_db[N=%g,lambda=%g]", n + 2.0, kDensities[i]), db);
    }
  }
  v.passed = ok == 12;
  v.detail = fmt("%g/12 entries within 0.15 dB, worst deviation %.3f dB", ok, worst);
  v.values.emplace_back("worst_abs_diff_db", worst);
  return v;
}

Verdict comp_size_consistency(Context &ctx) {
  Verdict v;
  v.name = "mean CoMP size, analytic vs simulation";
  const std::int64_t trials = ctx.budget().nominal;
  int ok = 0;
  double worst_z = 0.0;
  for (int n = 2; n <= 3; ++n) {
    for (int i = 0; i < 6; ++i) {
      const NetworkModel m = ctx.at(kDensities[i]);
      const double eta = ctx.eta(kDensities[i], n);
      const double an =
          mean_comp_size_analytic(m, Eigen::MatrixXd::Constant(m.num_tiers(), m.num_tiers(), eta));
      const MeanWithCi mc = comp_size_mc(m, eta, trials, ctx.opt().seed + 100 * n + i, 0.99);
      ok += an >= mc.ci_lo && an <= mc.ci_hi;
      worst_z = std::max(worst_z, std::abs(an - mc.mean) / mc.std_error);
      v.values.emplace_back(fmt("mc_mean[N=%g,lambda=%g]", n, kDensities[i]), mc.mean);
    }
  }
  v.passed = ok == 12;
  v.detail = fmt("%g/12 points inside the 99%% interval, worst |z| = %.2f, %g trials each", ok,
                 worst_z, static_cast<double>(trials));
  return v;
}

NetworkModel special_case_network(const NetworkModel &base, double lambda) {
  NetworkModel m;
  TierParams t = base.tiers.back();
  t.density = lambda;
  t.deployment = Deployment::ppp;
  m.tiers.push_back(t);
  m.user_height = base.user_height;
  m.user_density = base.user_density;
  m.blockage = base.blockage;
  m.blockage.los_enabled = false;
  m.channel.alpha_los = 4.0;
  m.channel.alpha_nlos = 4.0;
  m.channel.m_los = 1;
  m.channel.m_nlos = 1;
  return m;
}

Verdict special_case_agreement(Context &ctx) {
  Verdict v;
  v.name = "single-tier NLoS Rayleigh, analytic vs simulation";
  std::vector<double> thr;
  for (int i = 0; i < 10; ++i)
    thr.push_back(db_to_ratio(-10.0 + 30.0 * i / 9.0));
  double worst = 0.0, worst_at_db = 0.0, worst_lambda = 0.0;
  int k = 0;
  for (double lam : {1e-5, 1e-4, 1e-3}) {
    const NetworkModel m = special_case_network(ctx.base(), lam);
    const CalibrationResult c = calibrate_eta(m, 2.0);
    const Eigen::MatrixXd E = Eigen::MatrixXd::Constant(1, 1, c.eta);
    const CompPolicy p[1] = {CompPolicy::rrlp(1, c.eta)};
    const auto rep = ctx.mc(m, p, thr, ctx.budget().nominal, 0x5c + k++);
    SpecialCaseOptions so;
    so.seed = ctx.opt().seed;
    for (std::size_t t = 0; t < thr.size(); ++t) {
      const double an = coverage_special_case(m, thr[t], E, so).value;
      const double d = std::abs(an - rep[t].coverage.value);
      if (d > worst) {
        worst = d;
        worst_at_db = ratio_to_db(thr[t]);
        worst_lambda = lam;
      }
    }
  }
  v.passed = worst <= 0.02;
  v.detail = fmt("max |analytic - MC| = %.4f (lambda %g, threshold %.2f dB), limit 0.02", worst,
                 worst_lambda, worst_at_db);
  v.values.emplace_back("max_abs_diff", worst);
  return v;
}

Verdict bracket_validity(Context &ctx) {
  Verdict v;
  v.name = "coverage bracket contains simulation";
  struct Point {
    double lambda;
    int n;
    double threshold;
  };
  const Point pts[] = {{1e-4, 2, 1.0}, {1e-3, 2, 1.0}, {5e-3, 3, 1.0}};
  int ok = 0, k = 0;
  std::ostringstream os;
  for (const auto &pt : pts) {
    const NetworkModel m = ctx.at(pt.lambda);
    const double eta = ctx.eta(pt.lambda, pt.n);
    const Eigen::MatrixXd E = Eigen::MatrixXd::Constant(m.num_tiers(), m.num_tiers(), eta);
    AnalyticOptions ao;
    ao.seed = ctx.opt().seed;
    if (ctx.opt().level == Level::fast)
      ao.inner.inner_samples = 128;
    const CoverageBracket b = coverage_analytic(m, E, pt.threshold, ao);
    const CompPolicy p[1] = {CompPolicy::rrlp(m.num_tiers(), eta)};
    const double t[1] = {pt.threshold};
    const double R = window_radius_for(m, 1e-2);
    const auto rep = ctx.mc(m, p, t, trials_for(m, R, ctx.budget()), 0xb4 + k++);
    const double mc = rep[0].coverage.value;
    const bool in = mc >= b.lower - 0.03 && mc <= b.upper + 0.03;
    ok += in;
    os << fmt("lambda %g: MC %.4f vs [%.4f, ", pt.lambda, mc, b.lower)
       << fmt("%.4f] ", b.upper) << (in ? "ok; " : "outside; ");
    v.values.emplace_back(fmt("mc[lambda=%g]", pt.lambda), mc);
    v.values.emplace_back(fmt("lower[lambda=%g]", pt.lambda), b.lower);
    v.values.emplace_back(fmt("upper[lambda=%g]", pt.lambda), b.upper);
  }
  v.passed = ok == 3;
  v.detail = os.str();
  v.detail.resize(v.detail.size() - 2);
  return v;
}

Verdict gamma_exactness(Context &ctx) {
  Verdict v;
  v.name = "gamma approximation";
  const NetworkModel &m = ctx.base();
  double worst = 0.0;
  for (int j = 0; j < m.num_tiers(); ++j) {
    for (LinkClass c : kBothClasses) {
      const double r = m.height_gap(j) + 70.0;
      const GammaApprox g = gamma_approx({j, c, r}, {}, m);
      const int mm = m.channel.m(c);
      const double beta = m.tiers[j].tx_power * std::pow(r, -m.channel.alpha(c)) / mm;
      worst = std::max({worst, std::abs(g.shape / mm - 1.0), std::abs(g.scale / beta - 1.0)});
    }
  }
  const bool single_ok = worst <= 1e-9;

  const int tier2 = m.num_tiers() - 1;
  const CoopLink main{tier2, LinkClass::los, m.height_gap(tier2) + 80.0};
  const CoopLink coop[] = {{tier2, LinkClass::nlos, m.height_gap(tier2) + 60.0},
                           {0, LinkClass::los, m.height_gap(0) + 300.0}};
  const GammaApprox g = gamma_approx(main, coop, m);
  std::vector<double> a;
  std::vector<int> shape;
  for (const CoopLink &l : {main, coop[0], coop[1]}) {
    a.push_back(std::sqrt(m.tiers[l.tier].tx_power) *
                std::pow(l.distance, -0.5 * m.channel.alpha(l.cls)));
    shape.push_back(m.channel.m(l.cls));
  }
  const std::int64_t n = ctx.opt().level == Level::full ? 10000000 : 1000000;
  auto draw = [&](Rng &rng) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      std::gamma_distribution<double> gd(shape[i], 1.0 / shape[i]);
      s += a[i] * std::sqrt(gd(rng));
    }
    return s * s;
  };
  RunningStats first;
  Rng rng = substream(ctx.opt().seed, 0, 0x6761);
  for (std::int64_t i = 0; i < n; ++i)
    first.add(draw(rng));
  const double mean = first.mean();
  RunningStats centered;
  Rng rng2 = substream(ctx.opt().seed, 1, 0x6761);
  for (std::int64_t i = 0; i < n; ++i) {
    const double d = draw(rng2) - mean;
    centered.add(d * d);
  }
  const double z_mean = std::abs(g.shape * g.scale - mean) / first.std_error();
  const double z_var = std::abs(g.shape * g.scale * g.scale - centered.mean()) /
                       centered.std_error();
  v.passed = single_ok && z_mean <= 3.0 && z_var <= 3.0;
  v.detail = fmt("single link max rel. error %.2e; multi-link mean |z| = %.2f, ", worst, z_mean) +
             fmt("variance |z| = %.2f over %g draws", z_var, static_cast<double>(n));
  v.values.emplace_back("single_link_rel_error", worst);
  v.values.emplace_back("mean_z", z_mean);
  v.values.emplace_back("variance_z", z_var);
  return v;
}

struct Curve {
  std::vector<double> value, lo, hi;
};

// No significant move against the claimed direction between neighbours.
bool no_significant_rise(const Curve &c, std::size_t from, std::size_t to) {
  for (std::size_t i = from; i + 1 <= to && i + 1 < c.value.size(); ++i)
    if (c.lo[i + 1] > c.hi[i])
      return false;
  return true;
}

bool no_significant_drop(const Curve &c, std::size_t from, std::size_t to) {
  for (std::size_t i = from; i + 1 <= to && i + 1 < c.value.size(); ++i)
    if (c.hi[i + 1] < c.lo[i])
      return false;
  return true;
}

Verdict coverage_trends(Context &ctx) {
  Verdict v;
  v.name = "coverage trend in density";
  const double t[1] = {1.0};
  Curve los, nlos;
  NetworkModel nbase = ctx.base();
  nbase.blockage.los_enabled = false;
  nbase.channel.m_nlos = 1;
  int k = 0;
  for (double lam : kDensities) {
    {
      const NetworkModel m = ctx.at(lam);
      const CompPolicy p[1] = {CompPolicy::rrlp(m.num_tiers(), ctx.eta(lam, 2))};
      const double R = window_radius_for(m, 1e-2);
      const auto rep = ctx.mc(m, p, t, trials_for(m, R, ctx.budget()), 0x7e + k++);
      los.value.push_back(rep[0].coverage.value);
      los.lo.push_back(rep[0].coverage.ci_lo);
      los.hi.push_back(rep[0].coverage.ci_hi);
    }
    {
      const NetworkModel m = with_total_density(nbase, lam);
      const double eta = calibrate_eta(m, 2.0).eta;
      const CompPolicy p[1] = {CompPolicy::rrlp(m.num_tiers(), eta)};
      const double R = window_radius_for(m, 1e-2);
      const auto rep = ctx.mc(m, p, t, trials_for(m, R, ctx.budget()), 0x7e + k++);
      nlos.value.push_back(rep[0].coverage.value);
      nlos.lo.push_back(rep[0].coverage.ci_lo);
      nlos.hi.push_back(rep[0].coverage.ci_hi);
    }
    v.values.emplace_back(fmt("los_coverage[lambda=%g]", lam), los.value.back());
    v.values.emplace_back(fmt("nlos_coverage[lambda=%g]", lam), nlos.value.back());
  }
  const std::size_t last = los.value.size() - 1;
  const std::size_t peak =
      std::max_element(los.value.begin(), los.value.end()) - los.value.begin();
  const bool interior = los.lo[peak] > los.hi[0] && los.lo[peak] > los.hi[last];
  const bool peaked = interior && no_significant_drop(los, 0, peak) &&
                      no_significant_rise(los, peak, last);
  const bool falling = no_significant_rise(nlos, 0, last) && nlos.hi[last] < nlos.lo[0];
  v.passed = peaked && falling;
  std::ostringstream os;
  os << "LoS/NLoS peak at lambda " << kDensities[peak] << (peaked ? " (single-peaked)" : " (not single-peaked)")
     << "; NLoS-only " << (falling ? "decreasing" : "not decreasing");
  v.detail = os.str();
  return v;
}

Verdict scheme_comparison(Context &ctx) {
  Verdict v;
  v.name = "RRLP vs FNSB transmit ASE";
  const double lam = 5e-3;
  const NetworkModel m = ctx.at(lam);
  const CompPolicy p[2] = {CompPolicy::rrlp(m.num_tiers(), ctx.eta(lam, 2)),
                           CompPolicy::fnsb(2)};
  const double t[1] = {1.0};
  const double R = window_radius_for(m, 1e-2);
  const std::int64_t trials = std::max<std::int64_t>(trials_for(m, R, ctx.budget()) / 2, 2000);
  const auto rep = ctx.mc(m, p, t, trials, 0x7a5e);
  const double rr = rep[0].tx_ase.value, fn = rep[1].tx_ase.value;
  const double gain = rr / fn - 1.0;
  v.passed = gain >= 0.10;
  v.detail = fmt("RRLP %.4g, FNSB %.4g bit/s/Hz/m^2, ", rr, fn) +
             fmt("relative improvement %.1f%% (gate 10%%), %g trials", 100.0 * gain,
                 static_cast<double>(trials));
  v.values.emplace_back("rrlp_tx_ase", rr);
  v.values.emplace_back("fnsb_tx_ase", fn);
  v.values.emplace_back("relative_improvement", gain);
  return v;
}

Verdict concentration(Context &ctx) {
  Verdict v;
  v.name = "CoMP set concentration";
  double worst = 1.0, worst_lambda = 0.0;
  int i = 0;
  for (double lam : kDensities) {
    const NetworkModel m = ctx.at(lam);
    std::vector<std::uint64_t> hist;
    const std::int64_t trials = ctx.budget().nominal;
    comp_size_mc(m, ctx.eta(lam, 3), trials, ctx.opt().seed + 700 + i++, 0.95, &hist);
    std::uint64_t le7 = 0;
    for (std::size_t n = 0; n < hist.size() && n <= 7; ++n)
      le7 += hist[n];
    const double p = static_cast<double>(le7) / static_cast<double>(trials);
    v.values.emplace_back(fmt("p_le_7[lambda=%g]", lam), p);
    if (p < worst) {
      worst = p;
      worst_lambda = lam;
    }
  }
  v.passed = worst >= 0.93;
  v.detail = fmt("min P(N <= 7) = %.4f at lambda %g (gate 0.93)", worst, worst_lambda);
  return v;
}

Verdict nee_ordering(Context &ctx) {
  Verdict v;
  v.name = "energy efficiency ordering";
  const PowerModel pw = PowerModel::defaults(ctx.base().num_tiers());
  const double t[1] = {1.0};
  bool ok = true;
  std::ostringstream os;
  int k = 0;
  for (double lam : {5e-3, 1e-2, 5e-2}) {
    const NetworkModel m = ctx.at(lam);
    const int K = m.num_tiers();
    const CompPolicy p[3] = {CompPolicy::rrlp(K, ctx.eta(lam, 2)),
                             CompPolicy::rrlp(K, ctx.eta(lam, 3)), CompPolicy::no_comp()};
    const double R = window_radius_for(m, 1e-2);
    auto rep = ctx.mc(m, p, t, trials_for(m, R, ctx.budget()), 0x4ee + k++);
    for (auto &r : rep)
      nee(m, pw, r);
    const bool here = rep[0].tx_nee.value > rep[2].tx_nee.value &&
                      rep[1].tx_nee.value > rep[2].tx_nee.value &&
                      rep[0].rx_nee.value > rep[2].rx_nee.value &&
                      rep[1].rx_nee.value > rep[2].rx_nee.value &&
                      rep[1].tx_nee.value > rep[0].tx_nee.value &&
                      rep[1].rx_nee.value > rep[0].rx_nee.value;
    ok = ok && here;
    os << "lambda " << lam << (here ? " ok" : " violated") << "; ";
    const char *names[3] = {"n2", "n3", "no_comp"};
    for (int i = 0; i < 3; ++i) {
      v.values.emplace_back(std::string("tx_nee_") + names[i] + fmt("[lambda=%g]", lam),
                            rep[i].tx_nee.value);
      v.values.emplace_back(std::string("rx_nee_") + names[i] + fmt("[lambda=%g]", lam),
                            rep[i].rx_nee.value);
    }
  }
  v.passed = ok;
  v.detail = os.str();
  v.detail.resize(v.detail.size() - 2);
  return v;
}

// direct power series of 2F1 in long double, |z| < 1
long double hyp_series(long double a, long double b, long double c, long double z) {
  long double term = 1.0L, sum = 1.0L;
  for (long n = 0; n < 2000000; ++n) {
    term *= (a + n) * (b + n) / ((c + n) * (n + 1)) * z;
    sum += term;
    if (std::fabs(term) < 1e-22L * std::fabs(sum))
      break;
  }
  return sum;
}

double brute_fourth(const std::vector<double> &a, const std::vector<int> &m) {
  const std::size_t n = a.size();
  auto tau = [](int mm, int w) {
    return std::exp(std::lgamma(mm + 0.5 * w) - std::lgamma(double(mm)) -
                    0.5 * w * std::log(double(mm)));
  };
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = 0; l < n; ++l) {
          int pw[4] = {0, 0, 0, 0};
          ++pw[i], ++pw[j], ++pw[k], ++pw[l];
          double term = a[i] * a[j] * a[k] * a[l];
          for (std::size_t q = 0; q < n; ++q)
            term *= tau(m[q], pw[q]);
          s += term;
        }
  return s;
}

std::string determinism_csv(const NetworkModel &m, std::span<const CompPolicy> p,
                            std::span<const double> t, SimConfig cfg) {
  const auto rep = simulate(m, p, t, cfg);
  std::vector<CsvRow> rows;
  for (const auto &r : rep) {
    rows.push_back({r.threshold, r.scheme, "mc", r.coverage.value, r.coverage.ci_lo,
                    r.coverage.ci_hi});
    rows.push_back({r.threshold, r.scheme, "mc", r.tx_ase.value, r.tx_ase.ci_lo,
                    r.tx_ase.ci_hi});
    rows.push_back({r.threshold, r.scheme, "mc", r.per_user_se.value, r.per_user_se.ci_lo,
                    r.per_user_se.ci_hi});
    rows.push_back({r.threshold, r.scheme, "mc", r.mean_comp_size.value,
                    r.mean_comp_size.ci_lo, r.mean_comp_size.ci_hi});
  }
  std::ostringstream os;
  write_csv(os, rows);
  return os.str();
}

Verdict properties(Context &ctx) {
  Verdict v;
  v.name = "property suites";
  std::vector<std::string> failed;

  // association probabilities and main-link densities
  double assoc_err = 0.0, norm_err = 0.0;
  for (double lam : kDensities) {
    const NetworkModel m = ctx.at(lam);
    const auto laws = association_law(m);
    double total = 0.0;
    for (const auto &law : laws) {
      total += law.assoc_prob();
      if (!(law.assoc_prob() > 1e-12))
        continue;
      QuadSpec q;
      q.abs_tol = 1e-13;
      q.rel_tol = 1e-11;
      q.max_subdivisions = 4000;
      const double med = law.median();
      q.tail_scale = med;
      auto pdf = [&](double r) { return law.pdf(r); };
      // split at a quantile ladder so kinks sit inside short panels
      std::vector<double> cuts = {law.lower()};
      for (double p : {1e-3, 1e-2, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99, 0.999}) {
        const double x = p == 0.5 ? med : law.quantile(p);
        if (x > cuts.back())
          cuts.push_back(x);
      }
      double mass = integrate_1d(pdf, cuts.back(), std::numeric_limits<double>::infinity(),
                                 q.with_scale(cuts.back()))
                        .value;
      for (std::size_t c = 0; c + 1 < cuts.size(); ++c)
        mass += integrate_1d(pdf, cuts[c], cuts[c + 1], q).value;
      norm_err = std::max(norm_err, std::abs(mass - 1.0));
    }
    assoc_err = std::max(assoc_err, std::abs(total - 1.0));
  }
  if (assoc_err > 1e-6)
    failed.push_back("association sum");
  if (norm_err > 1e-6)
    failed.push_back("pdf normalization");
  v.values.emplace_back("assoc_sum_error", assoc_err);
  v.values.emplace_back("pdf_norm_error", norm_err);

  // fourth moment against brute force, every tier/class pattern with N <= 4
  const NetworkModel &b = ctx.base();
  const int K = b.num_tiers();
  const int choices = 2 * K;
  Rng rng = substream(ctx.opt().seed, 0, 0x78);
  std::uniform_real_distribution<double> dist(20.0, 400.0);
  double xi_err = 0.0;
  int configs = 0;
  for (int n = 1; n <= 4; ++n) {
    int total = 1;
    for (int i = 0; i < n; ++i)
      total *= choices;
    for (int code = 0; code < total; ++code) {
      std::vector<double> a;
      std::vector<int> shape;
      int c = code;
      for (int i = 0; i < n; ++i) {
        const int pick = c % choices;
        c /= choices;
        const int j = pick / 2;
        const LinkClass cls = pick % 2 ? LinkClass::nlos : LinkClass::los;
        a.push_back(std::sqrt(b.tiers[j].tx_power) *
                    std::pow(dist(rng), -0.5 * b.channel.alpha(cls)));
        shape.push_back(b.channel.m(cls));
      }
      const double ref = brute_fourth(a, shape);
      xi_err = std::max(xi_err, std::abs(amplitude_fourth_moment(a, shape) / ref - 1.0));
      ++configs;
    }
  }
  if (xi_err > 1e-12)
    failed.push_back("fourth moment");
  v.values.emplace_back("xi_rel_error", xi_err);

  // 2F1 against series and closed forms
  double hyp_err = 0.0;
  for (int i = 0; i <= 20; ++i) {
    const double alpha = 2.1 + 0.2 * i;
    const double d = 2.0 / alpha;
    for (int k = 1; k <= 19; ++k) {
      const double z = -0.05 * k;
      const double ref = static_cast<double>(hyp_series(1.0L, 1.0L - d, 2.0L - d, z));
      hyp_err = std::max(hyp_err, std::abs(hyp2f1(1.0, 1.0 - d, 2.0 - d, z) / ref - 1.0));
    }
  }
  for (double x : {1.5, 3.0, 10.0, 100.0, 1000.0}) {
    hyp_err = std::max(hyp_err,
                       std::abs(hyp2f1(1.0, 0.5, 1.5, -x * x) / (std::atan(x) / x) - 1.0));
    hyp_err = std::max(hyp_err,
                       std::abs(hyp2f1(1.0, 1.0, 2.0, -x) / (std::log1p(x) / x) - 1.0));
  }
  if (hyp_err > 1e-10)
    failed.push_back("2F1");
  v.values.emplace_back("hyp2f1_rel_error", hyp_err);

  // alternating signs of the Laplace transform derivatives
  std::int64_t sign_points = 0, sign_bad = 0;
  for (double lam : {1e-4, 1e-3, 1e-2}) {
    const NetworkModel m = ctx.at(lam);
    const Eigen::MatrixXd E = Eigen::MatrixXd::Constant(K, K, ctx.eta(lam, 2));
    for (const auto &law : association_law(m)) {
      if (!(law.assoc_prob() > 1e-9))
        continue;
      for (double q : {0.1, 0.5, 0.9}) {
        const double r = law.quantile(q);
        const InterferenceField f = interference_field(m, E, law.tier(), law.link_class(), r);
        const double y = m.tiers[law.tier()].tx_power *
                         std::pow(r, -m.channel.alpha(law.link_class()));
        for (double thr : {0.1, 1.0, 10.0}) {
          const Eigen::ArrayXd d = interference_laplace_derivs(f, thr / y, 12);
          for (int i = 0; i <= 12; ++i) {
            ++sign_points;
            sign_bad += (i % 2 ? -d[i] : d[i]) < 0;
          }
        }
      }
    }
  }
  if (sign_bad)
    failed.push_back("derivative signs");
  v.values.emplace_back("sign_violations", static_cast<double>(sign_bad));

  // byte-identical output under 1, 4 and 16 workers
  const NetworkModel m = ctx.at(1e-3);
  const CompPolicy p[3] = {CompPolicy::rrlp(K, ctx.eta(1e-3, 2)), CompPolicy::fnsb(2),
                           CompPolicy::no_comp()};
  const double t[3] = {0.5, 1.0, 2.0};
  SimConfig cfg;
  cfg.seed = ctx.opt().seed;
  cfg.trials = ctx.opt().level == Level::full ? 20000 : 5000;
  cfg.block_size = ctx.opt().level == Level::full ? 1024 : 256;
  cfg.workers = 1;
  const std::string ref = determinism_csv(m, p, t, cfg);
  bool same = true;
  for (int w : {4, 16}) {
    cfg.workers = w;
    same = same && determinism_csv(m, p, t, cfg) == ref;
  }
  if (!same)
    failed.push_back("worker determinism");

  v.passed = failed.empty();
  std::ostringstream os;
  os << "assoc |sum-1| " << assoc_err << ", pdf |mass-1| " << norm_err << ", xi rel "
     << xi_err << " over " << configs << " configs, 2F1 rel " << hyp_err << ", "
     << sign_bad << "/" << sign_points << " sign violations, CSVs "
     << (same ? "identical" : "differ") << " for 1/4/16 workers";
  if (!failed.empty()) {
    os << "; failed:";
    for (const auto &f : failed)
      os << ' ' << f;
  }
  v.detail = os.str();
  return v;
}

struct Criterion {
  int id;
  Verdict (*fn)(Context &);
  double time_limit; // seconds, 0 for none
};

} // namespace

NetworkModel reference_network() { return default_two_tier(1e-4, 0.2); }

std::string to_string(Level l) { return l == Level::full ? "full" : "fast"; }

Level parse_level(const std::string &s) {
  if (s == "fast")
    return Level::fast;
  if (s == "full")
    return Level::full;
  throw ConfigError("validation level must be 'fast' or 'full'");
}

std::vector<Verdict> run(const NetworkModel &base, const Options &opt) {
  base.validate();
  if (base.num_tiers() < 1)
    throw ConfigError("acceptance: the network needs at least one tier");
  Context ctx(base, opt);
  const Criterion all[] = {
      {1, eta_table, 120.0},         {2, comp_size_consistency, 600.0},
      {3, special_case_agreement, 1200.0}, {4, bracket_validity, 1800.0},
      {5, gamma_exactness, 0.0},     {6, coverage_trends, 0.0},
      {7, scheme_comparison, 0.0},   {8, concentration, 0.0},
      {9, nee_ordering, 0.0},        {10, properties, 0.0},
  };
  std::vector<Verdict> out;
  for (const auto &c : all) {
    if (!opt.only.empty() && std::find(opt.only.begin(), opt.only.end(), c.id) == opt.only.end())
      continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.fn(ctx);
    } catch (const std::exception &e) {
      v.passed = false;
      v.detail = std::string("error: ") + e.what();
    }
    v.id = c.id;
    v.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.time_limit > 0 && v.seconds > c.time_limit) {
      v.passed = false;
      v.detail += fmt(" (runtime %.0f s over the %.0f s limit)", v.seconds, c.time_limit);
    }
    if (opt.on_verdict)
      opt.on_verdict(v);
    out.push_back(std::move(v));
  }
  return out;
}

} // namespace udn::acceptance
