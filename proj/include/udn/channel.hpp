#pragma once

#include "udn/model.hpp"
#include "udn/rng.hpp"

#include <random>

namespace udn {

struct LinkGain {
  double arlp = 0.0;      // W
  double amplitude = 1.0; // sqrt(g)
  double power = 1.0;     // g
};

/// Average received link power sigma_j x^{-alpha_c}.
double arlp(int tier, double x, LinkClass c, const NetworkModel &m);

/// Gamma(m_c, 1/m_c) power fading draws for both link classes.
class FadingSampler {
public:
  explicit FadingSampler(const ChannelParams &ch)
      : los_(ch.m_los, 1.0 / ch.m_los), nlos_(ch.m_nlos, 1.0 / ch.m_nlos) {}
  double operator()(LinkClass c, Rng &rng) {
    return c == LinkClass::los ? los_(rng) : nlos_(rng);
  }
  //! Drops cached state so the next draw depends on the engine alone.
  void reset() {
    los_.reset();
    nlos_.reset();
  }

private:
  std::gamma_distribution<double> los_, nlos_;
};

LinkGain draw_fading(LinkClass c, const ChannelParams &ch, Rng &rng);

/// tau_{c,w} = E[g^{w/2}] = Gamma(m + w/2) / (Gamma(m) m^{w/2})
double nakagami_amp_moment(LinkClass c, int w, const ChannelParams &ch);
double nakagami_amp_moment(int m, int w);

/// chi_c = 1 - tau_{c,1}^2, the variance of the unit-power amplitude.
double amplitude_variance(LinkClass c, const ChannelParams &ch);

/// E[g^w e^{-t g}] = Gamma(m + w) / (Gamma(m) m^w) (1 + t/m)^{-(m + w)}
double exp_tilted_moment(LinkClass c, int w, double t, const ChannelParams &ch);
double exp_tilted_moment(int m, int w, double t);

} // namespace udn
