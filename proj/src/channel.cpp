#include "udn/channel.hpp"

#include "udn/numerics.hpp"

namespace udn {

double arlp(int tier, double x, LinkClass c, const NetworkModel &m) {
  if (tier < 0 || tier >= m.num_tiers())
    throw ParameterError("arlp: tier index out of range");
  if (!(x >= m.height_gap(tier)))
    throw ParameterError("arlp: link distance below the height gap");
  return m.tiers[tier].tx_power * std::pow(x, -m.channel.alpha(c));
}

LinkGain draw_fading(LinkClass c, const ChannelParams &ch, Rng &rng) {
  const int m = ch.m(c);
  std::gamma_distribution<double> g(m, 1.0 / m);
  LinkGain out;
  out.power = g(rng);
  out.amplitude = std::sqrt(out.power);
  return out;
}

double nakagami_amp_moment(int m, int w) {
  if (m < 1 || w < 0)
    throw ParameterError("nakagami_amp_moment: need m >= 1 and w >= 0");
  const double half = 0.5 * w;
  return std::exp(std::lgamma(m + half) - std::lgamma(double(m)) - half * std::log(double(m)));
}

double nakagami_amp_moment(LinkClass c, int w, const ChannelParams &ch) {
  return nakagami_amp_moment(ch.m(c), w);
}

double amplitude_variance(LinkClass c, const ChannelParams &ch) {
  const double t = nakagami_amp_moment(c, 1, ch);
  return 1.0 - t * t;
}

double exp_tilted_moment(int m, int w, double t) {
  if (m < 1 || w < 0 || !(t >= 0))
    throw ParameterError("exp_tilted_moment: need m >= 1, w >= 0, t >= 0");
  const double md = m;
  return std::exp(std::lgamma(md + w) - std::lgamma(md) - w * std::log(md) -
                  (md + w) * std::log1p(t / md));
}

double exp_tilted_moment(LinkClass c, int w, double t, const ChannelParams &ch) {
  return exp_tilted_moment(ch.m(c), w, t);
}

} // namespace udn
