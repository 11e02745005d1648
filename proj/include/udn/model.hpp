#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace udn {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class LinkClass : int { los = 0, nlos = 1 };
inline constexpr int kLinkClasses = 2;
inline constexpr LinkClass kBothClasses[kLinkClasses] = {LinkClass::los,
                                                         LinkClass::nlos};
inline int index_of(LinkClass c) { return static_cast<int>(c); }
const char *to_string(LinkClass c);

enum class Deployment { ppp, hex_grid };

/// Which height enters the rho / h factor of the LoS base.
enum class BlockageBaseHeight { height_difference, bs_height };

/// How the PA term of the BS power model uses the listed PA figure.
enum class PaTerm { divide_by_efficiency, multiply_literal };

enum class CompScheme { rrlp, fnsb, arlp_threshold, no_comp };
const char *to_string(CompScheme s);

// Unit conversions. Everything inside the library is SI.
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }
inline double db_to_ratio(double db) { return std::pow(10.0, db / 10.0); }
inline double ratio_to_db(double r) { return 10.0 * std::log10(r); }
inline double per_km2_to_per_m2(double v) { return v * 1e-6; }
inline double per_m2_to_per_km2(double v) { return v * 1e6; }

struct TierParams {
  double density = 0.0;         // BS per m^2
  double tx_power = 1.0;        // W
  double antenna_height = 10.0; // m
  Deployment deployment = Deployment::ppp;
};

struct BlockageParams {
  bool los_enabled = true; // false forces p_L == 0 everywhere
  double built_fraction = 0.5;
  double building_density = 300e-6; // buildings per m^2
  double mean_height = 20.0;        // m
  BlockageBaseHeight base_height = BlockageBaseHeight::height_difference;
};

struct ChannelParams {
  double alpha_los = 2.5;
  double alpha_nlos = 3.5;
  int m_los = 10;
  int m_nlos = 1;

  double alpha(LinkClass c) const {
    return c == LinkClass::los ? alpha_los : alpha_nlos;
  }
  int m(LinkClass c) const { return c == LinkClass::los ? m_los : m_nlos; }
};

struct NetworkModel {
  std::vector<TierParams> tiers;
  double user_height = 1.5;
  double user_density = 3e-3; // users per m^2
  BlockageParams blockage;
  ChannelParams channel;

  int num_tiers() const { return static_cast<int>(tiers.size()); }
  //! h_j = h_{b,j} - h_u
  double height_gap(int j) const { return tiers[j].antenna_height - user_height; }
  double total_density() const;
  //! Throws ConfigError naming the first violated invariant.
  void validate() const;
};

struct CompPolicy {
  CompScheme scheme = CompScheme::rrlp;
  Eigen::MatrixXd eta; // K x K; eta(j, k) for a tier-j BS given a tier-k main link
  int n_strongest = 2;
  double arlp_floor = 0.0; // W

  static CompPolicy rrlp(int num_tiers, double eta);
  static CompPolicy fnsb(int n);
  static CompPolicy arlp_threshold(double floor_watts);
  static CompPolicy no_comp();

  std::string label() const;
  void validate(int num_tiers) const;
};

struct PowerModel {
  Eigen::VectorXd antenna_power_bs;   // W per tier
  Eigen::VectorXd fixed_power;        // W per tier
  Eigen::VectorXd pa_efficiency;      // per tier, in (0, 1]
  Eigen::VectorXd compute_efficiency; // flops per W per tier
  double antenna_power_ue = 0.01;     // W
  double rate_power = 0.8e-9;         // W per bit/s
  double bandwidth = 20e6;            // Hz
  double coherence_block = 200.0;     // symbols
  PaTerm pa_term = PaTerm::divide_by_efficiency;

  static PowerModel defaults(int num_tiers);
  void validate(int num_tiers) const;
};

struct SimSettings {
  double window_radius = 0.0; // m; 0 selects window_radius_for()
  double neglect_fraction = 1e-2;
  std::int64_t trials = 10000;
  std::uint64_t seed = 1;
};

struct Scenario {
  NetworkModel model;
  CompPolicy policy;
  PowerModel power;
  SimSettings sim;
  double sir_threshold = 1.0; // linear
};

/// Two-tier network with the default macro/micro parameters and a given
/// total density (per m^2) split between tier 1 and tier 2.
NetworkModel default_two_tier(double total_density, double tier1_share = 0.2);

/// Parses the JSON scenario document. Missing fields take the defaults.
Scenario parse_scenario(const std::string &json_text);
Scenario load_scenario(const std::filesystem::path &path);
std::string serialize_scenario(const Scenario &s);

/// Same network with all tier densities rescaled to a new total, keeping shares.
NetworkModel with_total_density(const NetworkModel &m, double total);
/// Two-tier helper: same total density, tier-1 share replaced.
NetworkModel with_tier1_share(const NetworkModel &m, double share);

} // namespace udn
