#include "udn/sim_engine.hpp"

#include <atomic>
#include <limits>
#include <thread>

namespace udn {

std::vector<double> draw_fading_powers(const BsRealization &r, const ChannelParams &ch, Rng &rng) {
  FadingSampler fs(ch);
  std::vector<double> g(r.points.size());
  for (std::size_t i = 0; i < g.size(); ++i)
    g[i] = fs(r.points[i].link, rng);
  return g;
}

namespace {

double link_power(const BsPoint &p, const NetworkModel &m) {
  return m.tiers[p.tier].tx_power * std::pow(p.distance, -m.channel.alpha(p.link));
}

TrialOutcome evaluate(const CompAssignment &a, std::span<const double> arlp,
                      std::span<const double> fading, double threshold) {
  TrialOutcome o;
  o.counts = a.counts;
  if (a.empty) {
    o.empty = true;
    return o;
  }
  o.comp_size = a.size();
  o.main_tier = a.main_tier;
  o.main_class = a.main_class;
  o.main_distance = a.main_distance;

  double amp = std::sqrt(arlp[a.main] * fading[a.main]);
  for (int i : a.cooperators)
    amp += std::sqrt(arlp[i] * fading[i]);
  double interference = 0.0;
  for (int i : a.interferers)
    interference += arlp[i] * fading[i];

  if (interference > 0) {
    o.sir = amp * amp / interference;
  } else {
    o.sir = std::numeric_limits<double>::infinity();
    o.sentinel = true;
  }
  o.covered = o.sir >= threshold;
  return o;
}

} // namespace

TrialOutcome trial_sir(const BsRealization &r, const CompAssignment &a, const NetworkModel &m,
                       std::span<const double> fading, double threshold) {
  if (fading.size() != r.points.size())
    throw ParameterError("trial_sir: one fading value per point expected");
  std::vector<double> arlp(r.points.size());
  for (std::size_t i = 0; i < arlp.size(); ++i)
    arlp[i] = link_power(r.points[i], m);
  return evaluate(a, arlp, fading, threshold);
}

TrialOutcome trial_sir(const BsRealization &r, const CompAssignment &a, const NetworkModel &m,
                       Rng &rng, double threshold) {
  const auto g = draw_fading_powers(r, m.channel, rng);
  return trial_sir(r, a, m, g, threshold);
}

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

namespace {

struct ThresholdAcc {
  std::uint64_t covered = 0;
  RunningStats se;
  RunningStats tx; // sum_j lambda_j (N_j / N) SE / N
};

struct PolicyAcc {
  RunningStats size;
  std::vector<CompensatedSum> tier_size;
  std::vector<ThresholdAcc> thr;
  std::uint64_t sentinel = 0;
  std::uint64_t empty = 0;
};

struct BlockAcc {
  std::uint64_t trials = 0;
  std::vector<PolicyAcc> pol;

  BlockAcc(std::size_t P, std::size_t T, int K) : pol(P) {
    for (auto &p : pol) {
      p.tier_size.resize(K);
      p.thr.resize(T);
    }
  }
  void merge(const BlockAcc &o) {
    trials += o.trials;
    for (std::size_t p = 0; p < pol.size(); ++p) {
      PolicyAcc &a = pol[p];
      const PolicyAcc &b = o.pol[p];
      a.size.merge(b.size);
      for (std::size_t j = 0; j < a.tier_size.size(); ++j)
        a.tier_size[j].merge(b.tier_size[j]);
      for (std::size_t t = 0; t < a.thr.size(); ++t) {
        a.thr[t].covered += b.thr[t].covered;
        a.thr[t].se.merge(b.thr[t].se);
        a.thr[t].tx.merge(b.thr[t].tx);
      }
      a.sentinel += b.sentinel;
      a.empty += b.empty;
    }
  }
};

// State reused across the trials of one worker.
class TrialRunner {
public:
  TrialRunner(const NetworkModel &m, std::span<const CompPolicy> policies, double radius,
              std::uint64_t seed)
      : m_(m), policies_(policies), sampler_(m, radius), seed_(seed), fading_(m.channel) {}

  // Runs trial t; outcomes hold one entry per policy.
  void run(std::int64_t t, double threshold) {
    Rng rng = substream(seed_, static_cast<std::uint64_t>(t));
    sampler_.sample(rng, real_);
    fading_.reset();
    const std::size_t n = real_.points.size();
    arlp_.resize(n);
    gain_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      arlp_[i] = link_power(real_.points[i], m_);
      gain_[i] = fading_(real_.points[i].link, rng);
    }
    outcomes_.clear();
    for (const auto &p : policies_) {
      const CompAssignment a = assign(real_, arlp_, p, m_);
      outcomes_.push_back(evaluate(a, arlp_, gain_, threshold));
    }
  }

  const BsRealization &realization() const { return real_; }
  std::span<const TrialOutcome> outcomes() const { return outcomes_; }

private:
  const NetworkModel &m_;
  std::span<const CompPolicy> policies_;
  RealizationSampler sampler_;
  std::uint64_t seed_;
  FadingSampler fading_;
  BsRealization real_;
  std::vector<double> arlp_, gain_;
  std::vector<TrialOutcome> outcomes_;
};

double resolve_radius(const NetworkModel &m, const SimConfig &cfg) {
  return cfg.window_radius > 0 ? cfg.window_radius
                               : window_radius_for(m, cfg.neglect_fraction);
}

MetricValue mean_value(const RunningStats &s, double z, double scale = 1.0) {
  MetricValue v;
  v.value = scale * s.mean();
  v.std_error = scale * s.std_error();
  v.ci_lo = v.value - z * v.std_error;
  v.ci_hi = v.value + z * v.std_error;
  return v;
}

} // namespace

std::vector<MetricsReport> simulate(const NetworkModel &m, std::span<const CompPolicy> policies,
                                    std::span<const double> thresholds, const SimConfig &cfg) {
  m.validate();
  if (cfg.trials < 1)
    throw ParameterError("simulate: trials must be >= 1");
  if (cfg.block_size < 1 || cfg.workers < 1)
    throw ParameterError("simulate: block size and worker count must be >= 1");
  if (policies.empty() || thresholds.empty())
    throw ParameterError("simulate: need at least one policy and one threshold");
  for (const auto &p : policies)
    p.validate(m.num_tiers());
  const double radius = resolve_radius(m, cfg);
  const std::size_t P = policies.size(), T = thresholds.size();
  const int K = m.num_tiers();
  const std::int64_t blocks = (cfg.trials + cfg.block_size - 1) / cfg.block_size;

  std::vector<BlockAcc> results(blocks, BlockAcc(P, T, K));
  std::atomic<std::int64_t> next{0};

  auto worker = [&]() {
    TrialRunner runner(m, policies, radius, cfg.seed);
    for (;;) {
      const std::int64_t b = next.fetch_add(1);
      if (b >= blocks)
        return;
      BlockAcc &acc = results[b];
      const std::int64_t first = b * cfg.block_size;
      const std::int64_t last = std::min(cfg.trials, first + cfg.block_size);
      for (std::int64_t t = first; t < last; ++t) {
        runner.run(t, 0.0);
        ++acc.trials;
        const auto out = runner.outcomes();
        for (std::size_t p = 0; p < P; ++p) {
          const TrialOutcome &o = out[p];
          PolicyAcc &pa = acc.pol[p];
          pa.size.add(o.comp_size);
          if (o.empty) {
            ++pa.empty;
          } else {
            for (int j = 0; j < K; ++j)
              pa.tier_size[j].add(o.counts(j, 0) + o.counts(j, 1) + (o.main_tier == j));
          }
          if (o.sentinel)
            ++pa.sentinel;
          double weighted = 0.0; // sum_j lambda_j N_j
          if (!o.empty)
            for (int j = 0; j < K; ++j)
              weighted += m.tiers[j].density *
                          (o.counts(j, 0) + o.counts(j, 1) + (o.main_tier == j));
          for (std::size_t t2 = 0; t2 < T; ++t2) {
            ThresholdAcc &ta = pa.thr[t2];
            const bool cov = !o.empty && o.sir >= thresholds[t2];
            ta.covered += cov;
            const double se = cov && !o.sentinel ? std::log2(1.0 + o.sir) : 0.0;
            ta.se.add(se);
            const double n = o.comp_size;
            ta.tx.add(n > 0 ? weighted * se / (n * n) : 0.0);
          }
        }
      }
    }
  };

  const int nthreads = static_cast<int>(std::min<std::int64_t>(cfg.workers, blocks));
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < nthreads; ++i)
      pool.emplace_back(worker);
    for (auto &th : pool)
      th.join();
  }

  BlockAcc total(P, T, K);
  for (const auto &b : results)
    total.merge(b);

  const double z = normal_quantile(0.5 + 0.5 * cfg.confidence);
  std::vector<MetricsReport> reports;
  for (std::size_t p = 0; p < P; ++p) {
    const PolicyAcc &pa = total.pol[p];
    for (std::size_t t = 0; t < T; ++t) {
      const ThresholdAcc &ta = pa.thr[t];
      MetricsReport r;
      r.scheme = policies[p].label();
      r.threshold = thresholds[t];
      r.trials = total.trials;
      r.sentinel_trials = pa.sentinel;
      r.empty_trials = pa.empty;
      r.window_radius = radius;
      const double n = static_cast<double>(total.trials);
      r.coverage.value = ta.covered / n;
      r.coverage.std_error = std::sqrt(r.coverage.value * (1 - r.coverage.value) / n);
      const Interval w = wilson_interval(ta.covered, total.trials, cfg.confidence);
      r.coverage.ci_lo = w.lo;
      r.coverage.ci_hi = w.hi;
      r.per_user_se = mean_value(ta.se, z);
      r.rx_ase = mean_value(ta.se, z, m.user_density);
      r.tx_ase = mean_value(ta.tx, z);
      r.mean_comp_size = mean_value(pa.size, z);
      r.per_tier_comp_size.resize(K);
      for (int j = 0; j < K; ++j)
        r.per_tier_comp_size[j] = pa.tier_size[j].value() / n;
      reports.push_back(std::move(r));
    }
  }
  return reports;
}

MetricsReport coverage_mc(const NetworkModel &m, const CompPolicy &policy, double threshold,
                          std::int64_t trials, std::uint64_t seed) {
  if (trials < 100)
    throw ParameterError("coverage_mc: at least 100 trials are required");
  SimConfig cfg;
  cfg.trials = trials;
  cfg.seed = seed;
  const CompPolicy p[1] = {policy};
  const double t[1] = {threshold};
  return simulate(m, p, t, cfg)[0];
}

MetricsReport ase_mc(const NetworkModel &m, const CompPolicy &policy, double threshold,
                     std::int64_t trials, std::uint64_t seed) {
  return coverage_mc(m, policy, threshold, trials, seed);
}

void for_each_trial(const NetworkModel &m, std::span<const CompPolicy> policies,
                    double threshold, const SimConfig &cfg, const TrialVisitor &visit) {
  m.validate();
  for (const auto &p : policies)
    p.validate(m.num_tiers());
  TrialRunner runner(m, policies, resolve_radius(m, cfg), cfg.seed);
  for (std::int64_t t = 0; t < cfg.trials; ++t) {
    runner.run(t, threshold);
    visit(t, runner.realization(), runner.outcomes());
  }
}

// ---------------------------------------------------------------------------
// Energy efficiency
// ---------------------------------------------------------------------------

PowerBreakdown network_power(const NetworkModel &m, const PowerModel &pw,
                             const Eigen::VectorXd &per_tier_comp_size, double per_user_se) {
  const int K = m.num_tiers();
  pw.validate(K);
  if (per_tier_comp_size.size() != K)
    throw ParameterError("network_power: one mean CoMP size per tier expected");
  PowerBreakdown out;
  out.users_per_bs = Eigen::VectorXd::Zero(K);
  out.bs_power = Eigen::VectorXd::Zero(K);
  double areal = 0.0;
  for (int j = 0; j < K; ++j) {
    const double lam = m.tiers[j].density;
    if (lam > 0)
      out.users_per_bs[j] = m.user_density * per_tier_comp_size[j] / lam;
    const double pa = pw.pa_term == PaTerm::divide_by_efficiency
                          ? m.tiers[j].tx_power / pw.pa_efficiency[j]
                          : m.tiers[j].tx_power * pw.pa_efficiency[j];
    const double dsp = 3.0 * pw.bandwidth / (pw.coherence_block * pw.compute_efficiency[j]);
    out.bs_power[j] = pw.antenna_power_bs[j] + pw.fixed_power[j] + pa + dsp * out.users_per_bs[j];
    areal += lam * out.bs_power[j];
  }
  out.ue_power = pw.antenna_power_ue + per_user_se * pw.bandwidth * pw.rate_power;
  out.p_nec = areal + m.user_density * out.ue_power;
  return out;
}

void nee(const NetworkModel &m, const PowerModel &pw, MetricsReport &r) {
  const PowerBreakdown pb =
      network_power(m, pw, r.per_tier_comp_size, r.per_user_se.value);
  r.p_nec = pb.p_nec;
  auto scaled = [&](const MetricValue &v) {
    const double f = pw.bandwidth / pb.p_nec;
    MetricValue o;
    o.value = f * v.value;
    o.std_error = f * v.std_error;
    o.ci_lo = f * v.ci_lo;
    o.ci_hi = f * v.ci_hi;
    return o;
  };
  r.tx_nee = scaled(r.tx_ase);
  r.rx_nee = scaled(r.rx_ase);
}

} // namespace udn
