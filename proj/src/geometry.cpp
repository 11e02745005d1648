#include "udn/geometry.hpp"

#include "udn/numerics.hpp"

#include <numbers>
#include <ostream>

namespace udn {

namespace {

constexpr double kPi = std::numbers::pi;

// 1 - e^{-y}(1 + y) without cancellation for small y.
double los_kernel(double y) {
  if (y < 1e-2) {
    const double y2 = y * y;
    return y2 * (0.5 - y / 3.0 + y2 / 8.0 - y2 * y / 30.0 + y2 * y2 / 144.0);
  }
  return -std::expm1(-y) - y * std::exp(-y);
}

// y^2/2 - los_kernel(y)
double nlos_kernel(double y) {
  if (y < 1e-2) {
    const double y2 = y * y;
    return y2 * y * (1.0 / 3.0 - y / 8.0 + y2 / 30.0 - y2 * y / 144.0);
  }
  return 0.5 * y * y - los_kernel(y);
}

} // namespace

double LosProfile::los(double x) const {
  if (!enabled)
    return 0.0;
  const double u2 = x * x - h * h;
  return u2 > 0 ? std::exp(-decay * std::sqrt(u2)) : 1.0;
}

double LosProfile::mass(LinkClass c, double x) const {
  if (!(x > h))
    return 0.0;
  const double u2 = (x - h) * (x + h);
  if (!enabled)
    return c == LinkClass::los ? 0.0 : 0.5 * u2;
  const double y = decay * std::sqrt(u2);
  const double k2 = decay * decay;
  return (c == LinkClass::los ? los_kernel(y) : nlos_kernel(y)) / k2;
}

double LosProfile::mass_inverse(LinkClass c, double target) const {
  if (!(target > 0))
    return h;
  if (!enabled || (c == LinkClass::nlos && decay == 0.0)) {
    if (c == LinkClass::los)
      throw ParameterError("mass_inverse: LoS mass is identically zero");
    return std::sqrt(h * h + 2.0 * target);
  }
  if (c == LinkClass::los && target >= 1.0 / (decay * decay))
    throw ParameterError("mass_inverse: target exceeds the total LoS mass");
  auto f = [&](double u) { return mass(c, std::sqrt(h * h + u * u)) - target; };
  double hi = std::max(1.0, std::sqrt(2.0 * target));
  while (f(hi) < 0)
    hi *= 2.0;
  const double u = find_root_monotone(f, 0.0, hi, 1e-10 * hi);
  return std::sqrt(h * h + u * u);
}

LosProfile los_profile(int tier, const NetworkModel &m) {
  if (tier < 0 || tier >= m.num_tiers())
    throw ParameterError("los_profile: tier index out of range");
  LosProfile p;
  p.h = m.height_gap(tier);
  p.enabled = m.blockage.los_enabled;
  if (!p.enabled)
    return p;
  const auto &b = m.blockage;
  const double hb = m.tiers[tier].antenna_height;
  const double hh = b.base_height == BlockageBaseHeight::bs_height ? hb : p.h;
  const double s2 = b.mean_height * std::sqrt(2.0);
  const double base = 1.0 - std::sqrt(kPi / 2.0) * (b.mean_height / hh) *
                                (udn::erf(hb / s2) - udn::erf(m.user_height / s2));
  if (!(base > 0 && base < 1))
    throw ParameterError("los_profile: blockage base outside (0,1) for tier " +
                         std::to_string(tier + 1));
  p.decay = -std::sqrt(b.built_fraction * b.building_density) * std::log(base);
  return p;
}

double los_probability(double x, int tier, const NetworkModel &m) {
  const LosProfile p = los_profile(tier, m);
  if (!(x >= p.h))
    throw ParameterError("los_probability: link distance below the height gap");
  return p.los(x);
}

double link_probability(LinkClass c, double x, int tier, const NetworkModel &m) {
  const double pl = los_probability(x, tier, m);
  return c == LinkClass::los ? pl : 1.0 - pl;
}

double link_mass(LinkClass c, int tier, double x, const NetworkModel &m) {
  return los_profile(tier, m).mass(c, x);
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

RealizationSampler::RealizationSampler(const NetworkModel &m, double window_radius,
                                       const SamplingLimits &lim)
    : model_(m), radius_(window_radius) {
  if (!(window_radius > 0) || !std::isfinite(window_radius))
    throw ParameterError("sample_realization: window radius must be positive");
  const double expected = m.total_density() * kPi * window_radius * window_radius;
  if (expected > lim.max_expected_points)
    throw CapacityError("sample_realization: expected point count " +
                        std::to_string(expected) + " exceeds the configured cap");
  for (int j = 0; j < m.num_tiers(); ++j)
    profiles_.push_back(los_profile(j, m));
}

void RealizationSampler::sample(Rng &rng, BsRealization &out) const {
  out.points.clear();
  out.window_radius = radius_;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double R = radius_;

  auto push = [&](int j, double y) {
    const LosProfile &p = profiles_[j];
    BsPoint b;
    b.tier = j;
    b.horizontal = y;
    b.distance = std::sqrt(y * y + p.h * p.h);
    b.link = unif(rng) < p.los(b.distance) ? LinkClass::los : LinkClass::nlos;
    out.points.push_back(b);
  };

  for (int j = 0; j < model_.num_tiers(); ++j) {
    const TierParams &t = model_.tiers[j];
    if (t.density <= 0)
      continue;
    if (t.deployment == Deployment::ppp) {
      std::poisson_distribution<long> count(t.density * kPi * R * R);
      const long n = count(rng);
      for (long i = 0; i < n; ++i)
        push(j, R * std::sqrt(unif(rng)));
    } else {
      // Hexagonal lattice, uniformly random offset within one cell. Distances
      // to the origin do not depend on a global rotation.
      const double d = std::sqrt(2.0 / (std::sqrt(3.0) * t.density));
      const double ax = d, bx = 0.5 * d, by = 0.5 * std::sqrt(3.0) * d;
      const double u1 = unif(rng), u2 = unif(rng);
      const double ox = u1 * ax + u2 * bx, oy = u2 * by;
      const long M = static_cast<long>(std::ceil((R + 2.0 * d) / by)) + 1;
      for (long jj = -M; jj <= M; ++jj) {
        for (long ii = -M; ii <= M; ++ii) {
          const double px = ii * ax + jj * bx + ox;
          const double py = jj * by + oy;
          const double y = std::hypot(px, py);
          if (y <= R)
            push(j, y);
        }
      }
    }
  }
}

BsRealization sample_realization(const NetworkModel &m, double window_radius, Rng &rng,
                                 const SamplingLimits &lim) {
  RealizationSampler s(m, window_radius, lim);
  BsRealization r;
  s.sample(rng, r);
  return r;
}

BsRealization sample_realization(const NetworkModel &m, double window_radius,
                                 std::uint64_t seed, const SamplingLimits &lim) {
  Rng rng = substream(seed, 0);
  BsRealization r = sample_realization(m, window_radius, rng, lim);
  r.seed = seed;
  return r;
}

// ---------------------------------------------------------------------------
// Window sizing
// ---------------------------------------------------------------------------

double median_main_arlp(const NetworkModel &m) {
  const int K = m.num_tiers();
  if (!(m.total_density() > 0))
    throw ParameterError("median_main_arlp: network has no base stations");
  std::vector<LosProfile> prof;
  double log_ymax = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < K; ++j) {
    prof.push_back(los_profile(j, m));
    for (LinkClass c : kBothClasses)
      log_ymax = std::max(log_ymax, std::log(m.tiers[j].tx_power) -
                                        m.channel.alpha(c) * std::log(prof[j].h));
  }
  // void mass of {ARLP > y}
  auto excess = [&](double log_y) {
    double s = 0.0;
    for (int j = 0; j < K; ++j) {
      for (LinkClass c : kBothClasses) {
        const double x =
            std::exp((std::log(m.tiers[j].tx_power) - log_y) / m.channel.alpha(c));
        s += m.tiers[j].density * prof[j].mass(c, x);
      }
    }
    return 2.0 * kPi * s - std::log(2.0);
  };
  double lo = log_ymax - 10.0;
  while (excess(lo) < 0)
    lo -= 10.0;
  return std::exp(find_root_monotone(excess, lo, log_ymax, 1e-10));
}

double arlp_tail_beyond(const NetworkModel &m, double radius) {
  const auto &ch = m.channel;
  if (!(ch.alpha_nlos > 2))
    throw ParameterError("arlp_tail_beyond: aggregate ARLP diverges for alpha <= 2");
  double total = 0.0;
  for (int j = 0; j < m.num_tiers(); ++j) {
    const TierParams &t = m.tiers[j];
    if (t.density <= 0)
      continue;
    const LosProfile p = los_profile(j, m);
    const double x0 = std::sqrt(radius * radius + p.h * p.h);
    // NLoS: the full power-law tail minus its LoS-weighted part.
    double tail = std::pow(x0, 2.0 - ch.alpha_nlos) / (ch.alpha_nlos - 2.0);
    if (p.enabled) {
      QuadSpec q;
      q.abs_tol = 1e-300;
      q.rel_tol = 1e-9;
      q.tail_scale = std::max(1.0 / p.decay, 1.0);
      auto integrand = [&](double x) {
        const double pl = p.los(x);
        return (std::pow(x, 1.0 - ch.alpha_los) - std::pow(x, 1.0 - ch.alpha_nlos)) * pl;
      };
      tail += integrate_1d(integrand, x0, std::numeric_limits<double>::infinity(), q).value;
    }
    total += 2.0 * kPi * t.density * t.tx_power * tail;
  }
  return total;
}

double window_radius_for(const NetworkModel &m, double neglect_fraction) {
  if (!(neglect_fraction > 0 && neglect_fraction < 1))
    throw ParameterError("window_radius_for: neglect_fraction must lie in (0,1)");
  const double lam = m.total_density();
  if (!(lam > 0))
    throw ParameterError("window_radius_for: network has no base stations");
  const double target = neglect_fraction * median_main_arlp(m);
  const double floor = 10.0 * 0.5 / std::sqrt(lam);
  auto f = [&](double log_r) { return std::log(arlp_tail_beyond(m, std::exp(log_r)) / target); };
  double lo = std::log(std::max(1e-3, 0.01 * floor));
  if (f(lo) <= 0)
    return floor;
  double hi = lo + 1.0;
  while (f(hi) > 0) {
    hi += 1.0;
    if (hi > std::log(1e9))
      throw NumericError("window_radius_for: radius diverges");
  }
  const double r = std::exp(find_root_monotone(f, lo, hi, 1e-8));
  return std::max(r, floor);
}

void write_realization_csv(std::ostream &os, const BsRealization &r) {
  os << "tier,y_m,x_m,link_class\n";
  const auto old = os.precision(10);
  for (const auto &p : r.points)
    os << p.tier + 1 << ',' << p.horizontal << ',' << p.distance << ','
       << to_string(p.link) << '\n';
  os.precision(old);
}

} // namespace udn
