#pragma once

#include "udn/analytic.hpp"
#include "udn/geometry.hpp"
#include "udn/model.hpp"
#include "udn/numerics.hpp"

#include <Eigen/Dense>

#include <vector>

namespace udn {

using CountMatrix = Eigen::Matrix<int, Eigen::Dynamic, 2>;

struct CompAssignment {
  bool empty = true;      // no BS in the window
  int main = -1;          // index into the realization
  std::vector<int> cooperators; // excluding the main link
  std::vector<int> interferers;
  CountMatrix counts;     // n_j^c of cooperators, main excluded

  int main_tier = -1;
  LinkClass main_class = LinkClass::nlos;
  double main_distance = 0.0;

  int size() const { return empty ? 0 : 1 + static_cast<int>(cooperators.size()); }
  //! Number of tier-j BSs serving the user, the main link counted in its tier.
  int tier_size(int j) const;
};

/// Per-point ARLP of a realization.
std::vector<double> realization_arlp(const BsRealization &r, const NetworkModel &m);

CompAssignment assign(const BsRealization &r, const CompPolicy &policy, const NetworkModel &m);
/// Same, with the ARLPs already computed.
CompAssignment assign(const BsRealization &r, const std::vector<double> &arlp,
                      const CompPolicy &policy, const NetworkModel &m);

struct MeanWithCi {
  double mean = 0.0;
  double std_error = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::uint64_t count = 0;
};

/// Monte Carlo mean CoMP set size with a normal-approximation interval.
/// window_radius <= 0 samples the unbounded plane (rrlp, ppp tiers only).
/// histogram, when given, receives the trial count per set size.
MeanWithCi mean_comp_size_mc(const NetworkModel &m, const CompPolicy &policy,
                             double window_radius, std::int64_t trials, std::uint64_t seed,
                             double confidence = 0.95,
                             std::vector<std::uint64_t> *histogram = nullptr);

/// Horizontal radius holding the main link and every RRLP cooperator except
/// with probability miss_prob.
double comp_window_radius(const NetworkModel &m, const Eigen::MatrixXd &eta,
                          double miss_prob = 1e-6);

class CalibrationError : public NumericError {
public:
  using NumericError::NumericError;
};

struct CalibrationResult {
  double eta = 1.0; // ratio, broadcast to every (j, k)
  double eta_db = 0.0;
  double achieved = 1.0;
};

/// Scalar eta that makes the analytic mean CoMP size equal to target.
CalibrationResult calibrate_eta(const NetworkModel &m, double target_n_avg,
                                const QuadSpec &q = analytic_quad_defaults(), double tol_db = 1e-6);

} // namespace udn
