#pragma once

#include "udn/geometry.hpp"
#include "udn/model.hpp"
#include "udn/numerics.hpp"

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace udn {

/// Link-distance geometry around a main link: the ARLP-equivalent radii and
/// the void mass of stronger BSs. Shared by every analytic stage.
class LinkField {
public:
  explicit LinkField(const NetworkModel &m);

  const NetworkModel &model() const { return model_; }
  const LosProfile &profile(int j) const { return profiles_[j]; }
  int num_tiers() const { return model_.num_tiers(); }

  //! Distance at which a tier-j class-c BS has the ARLP of the main link.
  double theta(int j, LinkClass c, int k, LinkClass co, double r) const;
  //! 2 pi sum_j lambda_j sum_c G_j^c(theta_j^c)
  double void_mass(int k, LinkClass co, double r) const;
  //! 2 pi lambda_k r p_co(r) exp(-void_mass): main-link density times A_k^co.
  double main_density(int k, LinkClass co, double r) const;
  //! Radii r > h_k where some theta_j^c crosses h_j; with eta, also where the
  //! cooperation radius eta_jk^{-1/alpha_c} theta_j^c does.
  std::vector<double> kinks(int k, LinkClass co, const Eigen::MatrixXd *eta = nullptr) const;

private:
  NetworkModel model_;
  std::vector<LosProfile> profiles_;
};

/// Integrates f over [lo, inf) split at the given interior points.
double integrate_with_kinks(const std::function<double(double)> &f, double lo,
                            std::vector<double> kinks, const QuadSpec &q);

class MainLinkLaw {
public:
  MainLinkLaw(std::shared_ptr<const LinkField> field, int k, LinkClass co,
              const QuadSpec &q);

  int tier() const { return k_; }
  LinkClass link_class() const { return co_; }
  double assoc_prob() const { return assoc_; }
  double lower() const { return lower_; }
  //! Normalized main-link distance density on [h_k, inf).
  double pdf(double r) const;
  double cdf(double r) const;
  double quantile(double v) const;
  double median() const { return quantile(0.5); }

private:
  std::shared_ptr<const LinkField> field_;
  int k_;
  LinkClass co_;
  QuadSpec quad_;
  double lower_;
  double assoc_;
  double scale_;
  std::vector<double> kinks_;
};

QuadSpec analytic_quad_defaults();

/// One law per (tier, class), ordered tier-major, LoS before NLoS.
std::vector<MainLinkLaw> association_law(const NetworkModel &m,
                                         const QuadSpec &q = analytic_quad_defaults());

/// Mean CoMP set size under RRLP with the given eta matrix.
double mean_comp_size_analytic(const NetworkModel &m, const Eigen::MatrixXd &eta,
                               const QuadSpec &q = analytic_quad_defaults());

/// Expected number of tier-j BSs in the CoMP set (main link included in its tier).
Eigen::VectorXd per_tier_comp_size_analytic(const NetworkModel &m, const Eigen::MatrixXd &eta,
                                            const QuadSpec &q = analytic_quad_defaults());

// ---------------------------------------------------------------------------
// Gamma approximation of the combined signal power
// ---------------------------------------------------------------------------

struct CoopLink {
  int tier = 0;
  LinkClass cls = LinkClass::nlos;
  double distance = 0.0;
};

struct GammaApprox {
  double mu = 0.0;     // E[S]
  double omega = 0.0;  // Var[S]
  double xi = 0.0;     // E[S^4]
  double omega1 = 0.0; // Var[S^2]
  double shape = 0.0;  // zeta
  double scale = 0.0;  // beta
  int k0_floor = 0;
  int k0_ceil = 0;
};

/// S = sum_i a_i A_i with A_i independent unit-power Nakagami amplitudes of
/// integer shape m_i.
GammaApprox gamma_approx_amplitudes(std::span<const double> coef, std::span<const int> shape);

/// E[S^4] by convolving the per-link moment sequences.
double amplitude_fourth_moment(std::span<const double> coef, std::span<const int> shape);

GammaApprox gamma_approx(const CoopLink &main, std::span<const CoopLink> cooperators,
                         const NetworkModel &m);

// ---------------------------------------------------------------------------
// Interference Laplace transform and its derivatives
// ---------------------------------------------------------------------------

struct InterfererClass {
  int tier = 0;
  LinkClass cls = LinkClass::nlos;
  double density = 0.0;
  double power = 0.0;
  double alpha = 0.0;
  int m = 1;
  double lower = 0.0; // interferers live on (lower, inf)
  LosProfile profile;
};

struct InterferenceField {
  std::vector<InterfererClass> classes;
};

/// Interferers outside the RRLP cooperation region of a (k, c_o, r) main link.
InterferenceField interference_field(const NetworkModel &m, const Eigen::MatrixXd &eta, int k,
                                     LinkClass co, double r);

/// Interferers beyond given per-tier link-distance radii (same radius for both classes).
InterferenceField interference_field_beyond(const NetworkModel &m,
                                            std::span<const double> radius);

/// d_0 = -log L(s); d_n = (-s)^n (log L)^{(n)}(s) / n! >= 0 for n >= 1.
Eigen::ArrayXd laplace_log_series(const InterferenceField &f, double s, int n_max,
                                  const QuadSpec &q = analytic_quad_defaults());

/// a_m = (-s)^m L^{(m)}(s) / m! for m = 0..m_max (all non-negative).
Eigen::ArrayXd laplace_series(const InterferenceField &f, double s, int m_max,
                              const QuadSpec &q = analytic_quad_defaults());

/// Raw derivatives L^{(m)}(s), m = 0..m_max.
Eigen::ArrayXd interference_laplace_derivs(const InterferenceField &f, double s, int m_max,
                                           const QuadSpec &q = analytic_quad_defaults());

/// Campbell mean of the interference power.
double interference_mean(const InterferenceField &f,
                         const QuadSpec &q = analytic_quad_defaults());

// ---------------------------------------------------------------------------
// Coverage
// ---------------------------------------------------------------------------

struct CoverageBracket {
  double lower = 0.0;
  double upper = 0.0;
  double mc_error = 0.0;
  bool widened = false;
  double mid() const { return 0.5 * (lower + upper); }
};

struct ConditionalOptions {
  TruncationBudget budget;
  int inner_samples = 256;      // proportional allocation across configurations
  double widen_threshold = 0.02; // MC error above which the bracket is widened
  QuadSpec quad = analytic_quad_defaults();
};

/// Coverage given the main link (k, c_o, r), for several SIR thresholds
/// sharing the same inner samples.
std::vector<CoverageBracket>
conditional_coverage(double r, int k, LinkClass co, std::span<const double> thresholds,
                     const NetworkModel &m, const Eigen::MatrixXd &eta,
                     const ConditionalOptions &opt, Rng &rng);

CoverageBracket conditional_coverage(double r, int k, LinkClass co, double threshold,
                                     const NetworkModel &m, const Eigen::MatrixXd &eta,
                                     const ConditionalOptions &opt, std::uint64_t seed = 1);

struct OuterRule {
  int panels = 4;
  int nodes_per_panel = 6;
};

struct AnalyticOptions {
  ConditionalOptions inner;
  OuterRule outer;
  std::uint64_t seed = 1;
  QuadSpec quad = analytic_quad_defaults();
};

struct CoverageResult {
  std::vector<CoverageBracket> brackets; // one per threshold
  double assoc_mass_error = 0.0;        // |sum A - 1|
};

/// Overall RRLP coverage bracket, outer integral over the main-link laws on
/// quantile-mapped Gauss-Legendre nodes (common inner samples per node).
CoverageResult coverage_analytic(const NetworkModel &m, const Eigen::MatrixXd &eta,
                                 std::span<const double> thresholds,
                                 const AnalyticOptions &opt = {});
CoverageBracket coverage_analytic(const NetworkModel &m, const Eigen::MatrixXd &eta,
                                  double threshold, const AnalyticOptions &opt = {});

struct SpecialCaseOptions {
  TruncationBudget budget;
  int inner_samples = 2048;
  OuterRule outer;
  std::uint64_t seed = 1;
  QuadSpec quad = analytic_quad_defaults();
};

/// All-NLoS Rayleigh network: L_I(s) in closed form with 2F1.
double laplace_nlos_rayleigh(const NetworkModel &m, std::span<const double> lower, double s);

/// Coverage for the all-NLoS Rayleigh network with the combined power taken
/// as exponential with mean equal to the summed cooperating ARLPs.
Estimate<double> coverage_special_case(const NetworkModel &m, double threshold,
                                       const Eigen::MatrixXd &eta,
                                       const SpecialCaseOptions &opt = {});

/// Conditional value of the same, given a tier-k main link at distance r.
Estimate<double> special_case_conditional(double r, int k, double threshold,
                                          const NetworkModel &m, const Eigen::MatrixXd &eta,
                                          const SpecialCaseOptions &opt, Rng &rng);

// ---------------------------------------------------------------------------
// Spectral efficiency from coverage
// ---------------------------------------------------------------------------

/// E[log2(1+g) 1{g >= t0}] = log2(1+t0) p(t0) + int_{t0}^inf p(t) / ((1+t) ln 2) dt
double layer_cake_se(const std::function<double(double)> &coverage, double threshold,
                     const QuadSpec &q = {});

/// Fixed nodes t_i and weights w_i so that the tail integral above is
/// approximately sum_i w_i p(t_i). Nodes are Gauss-Legendre in log(1+t).
struct LayerCakeRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
LayerCakeRule layer_cake_rule(double threshold, double log_span = 24.0, int panels = 8,
                              int nodes_per_panel = 4);

struct RxAseResult {
  double per_user_se = 0.0;
  double per_user_se_lower = 0.0;
  double per_user_se_upper = 0.0;
  double rx_ase = 0.0;
};

RxAseResult rx_ase_analytic(const NetworkModel &m, const Eigen::MatrixXd &eta, double threshold,
                            const AnalyticOptions &opt = {});

} // namespace udn
