#include "udn/association.hpp"

#include "udn/analytic.hpp"

#include <algorithm>
#include <limits>
#include <numbers>
#include <numeric>

namespace udn {

int CompAssignment::tier_size(int j) const {
  if (empty)
    return 0;
  return counts(j, 0) + counts(j, 1) + (main_tier == j ? 1 : 0);
}

std::vector<double> realization_arlp(const BsRealization &r, const NetworkModel &m) {
  std::vector<double> out(r.points.size());
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    const BsPoint &p = r.points[i];
    out[i] = m.tiers[p.tier].tx_power * std::pow(p.distance, -m.channel.alpha(p.link));
  }
  return out;
}

CompAssignment assign(const BsRealization &r, const CompPolicy &policy, const NetworkModel &m) {
  return assign(r, realization_arlp(r, m), policy, m);
}

CompAssignment assign(const BsRealization &r, const std::vector<double> &arlp,
                      const CompPolicy &policy, const NetworkModel &m) {
  const int K = m.num_tiers();
  const int n = static_cast<int>(r.points.size());
  CompAssignment a;
  a.counts = CountMatrix::Zero(K, 2);
  if (n == 0)
    return a;

  a.empty = false;
  int best = 0;
  for (int i = 1; i < n; ++i)
    if (arlp[i] > arlp[best])
      best = i;
  a.main = best;
  const BsPoint &mp = r.points[best];
  a.main_tier = mp.tier;
  a.main_class = mp.link;
  a.main_distance = mp.distance;

  std::vector<char> coop(n, 0);
  switch (policy.scheme) {
  case CompScheme::rrlp: {
    const double ref = arlp[best];
    for (int i = 0; i < n; ++i)
      coop[i] = i != best && arlp[i] >= policy.eta(r.points[i].tier, a.main_tier) * ref;
    break;
  }
  case CompScheme::fnsb: {
    const int take = std::min(policy.n_strongest, n);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + take, order.end(), [&](int x, int y) {
      return arlp[x] > arlp[y] || (arlp[x] == arlp[y] && x < y);
    });
    for (int i = 0; i < take; ++i)
      coop[order[i]] = order[i] != best;
    break;
  }
  case CompScheme::arlp_threshold:
    for (int i = 0; i < n; ++i)
      coop[i] = i != best && arlp[i] >= policy.arlp_floor;
    break;
  case CompScheme::no_comp:
    break;
  }

  for (int i = 0; i < n; ++i) {
    if (i == best)
      continue;
    if (coop[i]) {
      a.cooperators.push_back(i);
      ++a.counts(r.points[i].tier, index_of(r.points[i].link));
    } else {
      a.interferers.push_back(i);
    }
  }
  return a;
}

namespace {

struct Candidate {
  int tier;
  double arlp;
};

// RRLP set size on the unbounded plane. Each tier is walked outward in
// horizontal distance and stops once even its strongest class cannot reach
// eta_min times the best ARLP seen so far.
class RadialCompSampler {
public:
  RadialCompSampler(const NetworkModel &m, const CompPolicy &policy)
      : m_(m), eta_(policy.eta), eta_min_(policy.eta.minCoeff()) {
    for (int j = 0; j < m.num_tiers(); ++j) {
      if (m.tiers[j].deployment != Deployment::ppp)
        throw ParameterError("mean_comp_size_mc: unbounded sampling needs ppp tiers");
      prof_.push_back(los_profile(j, m));
    }
  }

  int operator()(Rng &rng) {
    std::exponential_distribution<double> gap(1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    cand_.clear();
    double best = 0.0;
    for (int j = 0; j < m_.num_tiers(); ++j) {
      const double lam = m_.tiers[j].density;
      if (!(lam > 0))
        continue;
      const double P = m_.tiers[j].tx_power, h = prof_[j].h;
      double y2 = 0.0;
      for (;;) {
        y2 += gap(rng) / (std::numbers::pi * lam);
        const double x = std::sqrt(y2 + h * h);
        const double bound = P * std::max(std::pow(x, -m_.channel.alpha_los),
                                           std::pow(x, -m_.channel.alpha_nlos));
        if (best > 0 && bound < eta_min_ * best)
          break;
        const LinkClass c =
            unif(rng) < prof_[j].los(x) ? LinkClass::los : LinkClass::nlos;
        const double a = P * std::pow(x, -m_.channel.alpha(c));
        best = std::max(best, a);
        cand_.push_back({j, a});
      }
    }
    if (cand_.empty())
      return 0;
    int main = 0;
    for (int i = 1; i < static_cast<int>(cand_.size()); ++i)
      if (cand_[i].arlp > cand_[main].arlp)
        main = i;
    const int k = cand_[main].tier;
    int n = 1;
    for (int i = 0; i < static_cast<int>(cand_.size()); ++i)
      n += i != main && cand_[i].arlp >= eta_(cand_[i].tier, k) * cand_[main].arlp;
    return n;
  }

private:
  const NetworkModel &m_;
  Eigen::MatrixXd eta_;
  double eta_min_;
  std::vector<LosProfile> prof_;
  std::vector<Candidate> cand_;
};

} // namespace

MeanWithCi mean_comp_size_mc(const NetworkModel &m, const CompPolicy &policy,
                             double window_radius, std::int64_t trials, std::uint64_t seed,
                             double confidence, std::vector<std::uint64_t> *histogram) {
  if (trials < 1)
    throw ParameterError("mean_comp_size_mc: trials must be >= 1");
  m.validate();
  policy.validate(m.num_tiers());
  if (histogram)
    histogram->clear();
  RunningStats st;
  auto record = [&](int n) {
    st.add(n);
    if (!histogram)
      return;
    if (histogram->size() <= static_cast<std::size_t>(n))
      histogram->resize(n + 1, 0);
    ++(*histogram)[n];
  };
  if (window_radius > 0) {
    const RealizationSampler sampler(m, window_radius);
    BsRealization r;
    for (std::int64_t t = 0; t < trials; ++t) {
      Rng rng = substream(seed, static_cast<std::uint64_t>(t));
      sampler.sample(rng, r);
      record(assign(r, policy, m).size());
    }
  } else {
    if (policy.scheme != CompScheme::rrlp)
      throw ParameterError("mean_comp_size_mc: unbounded sampling supports rrlp only");
    RadialCompSampler sampler(m, policy);
    for (std::int64_t t = 0; t < trials; ++t) {
      Rng rng = substream(seed, static_cast<std::uint64_t>(t));
      record(sampler(rng));
    }
  }
  MeanWithCi out;
  out.mean = st.mean();
  out.std_error = st.std_error();
  out.count = st.count();
  const double z = normal_quantile(0.5 + 0.5 * confidence);
  out.ci_lo = out.mean - z * out.std_error;
  out.ci_hi = out.mean + z * out.std_error;
  return out;
}

double comp_window_radius(const NetworkModel &m, const Eigen::MatrixXd &eta, double miss_prob) {
  if (!(miss_prob > 0 && miss_prob < 1))
    throw ParameterError("comp_window_radius: miss_prob must lie in (0,1)");
  const int K = m.num_tiers();
  if (eta.rows() != K || eta.cols() != K || !(eta.minCoeff() > 0))
    throw ParameterError("comp_window_radius: eta must be a positive K x K matrix");
  std::vector<LosProfile> prof;
  double log_ymax = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < K; ++j) {
    prof.push_back(los_profile(j, m));
    for (LinkClass c : kBothClasses)
      log_ymax = std::max(log_ymax, std::log(m.tiers[j].tx_power) -
                                        m.channel.alpha(c) * std::log(prof[j].h));
  }
  auto dist = [&](int j, LinkClass c, double log_y) {
    return std::exp((std::log(m.tiers[j].tx_power) - log_y) / m.channel.alpha(c));
  };
  // strongest ARLP falls below y with probability exp(-mass{ARLP >= y})
  const double need = -std::log(miss_prob);
  constexpr double kPi = std::numbers::pi;
  auto excess = [&](double log_y) {
    double s = 0.0;
    for (int j = 0; j < K; ++j)
      for (LinkClass c : kBothClasses)
        s += m.tiers[j].density * prof[j].mass(c, dist(j, c, log_y));
    return 2.0 * kPi * s - need;
  };
  double lo = log_ymax - 10.0;
  while (excess(lo) < 0)
    lo -= 10.0;
  const double log_y = find_root_monotone(excess, lo, log_ymax, 1e-10);
  const double log_eta = std::log(eta.minCoeff());
  double radius = 0.0;
  for (int j = 0; j < K; ++j) {
    for (LinkClass c : kBothClasses) {
      const double x = dist(j, c, log_y + log_eta);
      radius = std::max(radius, std::sqrt(std::max(x * x - prof[j].h * prof[j].h, 0.0)));
    }
  }
  return radius;
}

CalibrationResult calibrate_eta(const NetworkModel &m, double target, const QuadSpec &q,
                                double tol_db) {
  if (!(target > 1))
    throw ParameterError("calibrate_eta: target mean CoMP size must exceed 1");
  const int K = m.num_tiers();
  auto n_avg = [&](double eta_db) {
    return mean_comp_size_analytic(m, Eigen::MatrixXd::Constant(K, K, db_to_ratio(eta_db)), q);
  };
  constexpr double lo_db = -80.0;
  if (n_avg(lo_db) < target)
    throw CalibrationError("calibrate_eta: target not reachable for eta above -80 dB");
  const double db = find_root_monotone([&](double e) { return n_avg(e) - target; }, lo_db, 0.0,
                                       tol_db);
  CalibrationResult res;
  res.eta_db = db;
  res.eta = db_to_ratio(db);
  res.achieved = n_avg(db);
  return res;
}

} // namespace udn
