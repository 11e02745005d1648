#pragma once

#include "udn/association.hpp"
#include "udn/channel.hpp"
#include "udn/geometry.hpp"
#include "udn/model.hpp"

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace udn {

struct TrialOutcome {
  double sir = 0.0; // +inf when the window holds no interferer
  int comp_size = 0;
  CountMatrix counts;
  int main_tier = -1;
  LinkClass main_class = LinkClass::nlos;
  double main_distance = 0.0;
  bool covered = false;
  bool empty = false;
  bool sentinel = false;
};

/// One Gamma(m_c, 1/m_c) power draw per point, in realization order.
std::vector<double> draw_fading_powers(const BsRealization &r, const ChannelParams &ch, Rng &rng);

/// SIR with coherent amplitude combining over the CoMP set and power-summed
/// interference, using the given per-point fading powers.
TrialOutcome trial_sir(const BsRealization &r, const CompAssignment &a, const NetworkModel &m,
                       std::span<const double> fading, double threshold);
TrialOutcome trial_sir(const BsRealization &r, const CompAssignment &a, const NetworkModel &m,
                       Rng &rng, double threshold);

struct MetricValue {
  double value = 0.0;
  double std_error = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

struct MetricsReport {
  std::string scheme;
  double threshold = 1.0;
  MetricValue coverage;       // Wilson interval
  MetricValue per_user_se;    // bit/s/Hz
  MetricValue rx_ase;         // bit/s/Hz/m^2
  MetricValue tx_ase;         // bit/s/Hz/m^2
  MetricValue mean_comp_size;
  Eigen::VectorXd per_tier_comp_size; // E[N_j], main link in its own tier
  MetricValue tx_nee;         // bit/J
  MetricValue rx_nee;         // bit/J
  double p_nec = 0.0;         // W/m^2
  std::uint64_t trials = 0;
  std::uint64_t sentinel_trials = 0;
  std::uint64_t empty_trials = 0;
  double window_radius = 0.0;
};

struct SimConfig {
  std::int64_t trials = 10000;
  std::uint64_t seed = 1;
  double window_radius = 0.0; // 0 selects window_radius_for()
  double neglect_fraction = 1e-2;
  int workers = 1;
  int block_size = 1024;
  double confidence = 0.95;
};

/// Runs all policies on shared realizations and fading draws. Reports are
/// ordered policy-major: index p * thresholds.size() + t.
std::vector<MetricsReport> simulate(const NetworkModel &m, std::span<const CompPolicy> policies,
                                    std::span<const double> thresholds, const SimConfig &cfg);

MetricsReport coverage_mc(const NetworkModel &m, const CompPolicy &policy, double threshold,
                          std::int64_t trials, std::uint64_t seed);
MetricsReport ase_mc(const NetworkModel &m, const CompPolicy &policy, double threshold,
                     std::int64_t trials, std::uint64_t seed);

/// Sequential visit of every trial with the per-policy outcomes (same
/// realizations and fading as simulate()).
using TrialVisitor = std::function<void(std::int64_t trial, const BsRealization &,
                                        std::span<const TrialOutcome>)>;
void for_each_trial(const NetworkModel &m, std::span<const CompPolicy> policies,
                    double threshold, const SimConfig &cfg, const TrialVisitor &visit);

struct PowerBreakdown {
  Eigen::VectorXd users_per_bs; // U_j
  Eigen::VectorXd bs_power;     // W per BS
  double ue_power = 0.0;        // W per user
  double p_nec = 0.0;           // W/m^2
};

/// Areal power consumption for the given mean per-tier CoMP sizes and per-user SE.
PowerBreakdown network_power(const NetworkModel &m, const PowerModel &pw,
                             const Eigen::VectorXd &per_tier_comp_size, double per_user_se);

/// Fills tx_nee, rx_nee and p_nec of a report.
void nee(const NetworkModel &m, const PowerModel &pw, MetricsReport &report);

} // namespace udn
