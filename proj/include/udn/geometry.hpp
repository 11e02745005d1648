#pragma once

#include "udn/model.hpp"
#include "udn/rng.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace udn {

struct BsPoint {
  int tier = 0;
  double horizontal = 0.0; // y, m
  double distance = 0.0;   // x = sqrt(y^2 + h_j^2), m
  LinkClass link = LinkClass::nlos;
};

struct BsRealization {
  std::vector<BsPoint> points; // grouped by tier, in tier order
  double window_radius = 0.0;
  std::uint64_t seed = 0;
};

class CapacityError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Precomputed per-tier blockage constants for the height-aware LoS model.
struct LosProfile {
  double h = 0.0;     // height gap h_j
  double decay = 0.0; // k with p_L = exp(-k sqrt(x^2 - h^2))
  bool enabled = true;

  double los(double x) const;
  double nlos(double x) const { return 1.0 - los(x); }
  double prob(LinkClass c, double x) const {
    return c == LinkClass::los ? los(x) : nlos(x);
  }
  //! int_h^x t p_c(t) dt, closed form
  double mass(LinkClass c, double x) const;
  //! Inverse of mass(c, .) on [h, inf); target must be below the total mass
  double mass_inverse(LinkClass c, double target) const;
};

LosProfile los_profile(int tier, const NetworkModel &m);

/// p_L(x) for a tier-j link; throws ParameterError for x < h_j.
double los_probability(double x, int tier, const NetworkModel &m);
double link_probability(LinkClass c, double x, int tier, const NetworkModel &m);

/// G_j^c(x) = int_{h_j}^{x} t p_c(t) dt (zero for x <= h_j).
double link_mass(LinkClass c, int tier, double x, const NetworkModel &m);

struct SamplingLimits {
  double max_expected_points = 2e6;
};

/// Reusable sampler: per-tier constants are computed once and the output
/// buffer is recycled between trials.
class RealizationSampler {
public:
  RealizationSampler(const NetworkModel &m, double window_radius,
                     const SamplingLimits &lim = {});
  void sample(Rng &rng, BsRealization &out) const;
  double window_radius() const { return radius_; }

private:
  NetworkModel model_;
  double radius_;
  std::vector<LosProfile> profiles_;
};

BsRealization sample_realization(const NetworkModel &m, double window_radius,
                                 std::uint64_t seed, const SamplingLimits &lim = {});
/// Same, drawing from a caller-supplied stream.
BsRealization sample_realization(const NetworkModel &m, double window_radius, Rng &rng,
                                 const SamplingLimits &lim = {});

/// Median of the strongest-link ARLP, from the void probability.
double median_main_arlp(const NetworkModel &m);
/// Mean ARLP from all BSs beyond horizontal radius R (Campbell).
double arlp_tail_beyond(const NetworkModel &m, double radius);
/// Window radius where the neglected mean ARLP is at most neglect_fraction of
/// the median main-link ARLP, and at least ten mean nearest-BS distances.
double window_radius_for(const NetworkModel &m, double neglect_fraction);

void write_realization_csv(std::ostream &os, const BsRealization &r);

} // namespace udn
