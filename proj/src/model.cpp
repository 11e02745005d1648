#include "udn/model.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace udn {

using nlohmann::json;

const char *to_string(LinkClass c) { return c == LinkClass::los ? "LoS" : "NLoS"; }

const char *to_string(CompScheme s) {
  switch (s) {
  case CompScheme::rrlp:
    return "rrlp";
  case CompScheme::fnsb:
    return "fnsb";
  case CompScheme::arlp_threshold:
    return "arlp_threshold";
  case CompScheme::no_comp:
    return "no_comp";
  }
  return "?";
}

namespace {

void require(bool ok, const std::string &what) {
  if (!ok)
    throw ConfigError("invalid scenario: " + what);
}

bool finite_positive(double v) { return std::isfinite(v) && v > 0; }

// Macro / micro defaults, indexed by tier; later tiers reuse the last entry.
constexpr double kDefaultPowerDbm[] = {44.0, 33.0};
constexpr double kDefaultHeight[] = {25.0, 10.0};

TierParams default_tier(int j) {
  const int i = std::min(j, 1);
  TierParams t;
  t.tx_power = dbm_to_watts(kDefaultPowerDbm[i]);
  t.antenna_height = kDefaultHeight[i];
  return t;
}

} // namespace

double NetworkModel::total_density() const {
  double s = 0.0;
  for (const auto &t : tiers)
    s += t.density;
  return s;
}

void NetworkModel::validate() const {
  require(!tiers.empty(), "at least one tier is required (K >= 1)");
  require(finite_positive(user_height), "user height must be > 0");
  require(finite_positive(user_density), "user density must be > 0");
  for (int j = 0; j < num_tiers(); ++j) {
    const auto &t = tiers[j];
    const std::string tag = "tier " + std::to_string(j + 1) + ": ";
    require(std::isfinite(t.density) && t.density >= 0, tag + "density must be >= 0");
    require(finite_positive(t.tx_power), tag + "tx power must be > 0");
    require(std::isfinite(t.antenna_height) && t.antenna_height > user_height,
            tag + "antenna height must exceed the user height");
  }
  const auto &b = blockage;
  require(b.built_fraction > 0 && b.built_fraction < 1,
          "blockage epsilon must lie in (0,1)");
  require(finite_positive(b.building_density), "building density must be > 0");
  require(finite_positive(b.mean_height), "mean building height must be > 0");
  const auto &c = channel;
  require(std::isfinite(c.alpha_los) && c.alpha_los >= 2, "alpha_los must be >= 2");
  require(std::isfinite(c.alpha_nlos) && c.alpha_nlos >= c.alpha_los,
          "alpha_nlos must be >= alpha_los");
  require(c.m_nlos >= 1, "m_nlos must be an integer >= 1");
  require(c.m_los >= c.m_nlos, "m_los must be >= m_nlos");
}

CompPolicy CompPolicy::rrlp(int num_tiers, double eta) {
  CompPolicy p;
  p.scheme = CompScheme::rrlp;
  p.eta = Eigen::MatrixXd::Constant(num_tiers, num_tiers, eta);
  return p;
}

CompPolicy CompPolicy::fnsb(int n) {
  CompPolicy p;
  p.scheme = CompScheme::fnsb;
  p.n_strongest = n;
  return p;
}

CompPolicy CompPolicy::arlp_threshold(double floor_watts) {
  CompPolicy p;
  p.scheme = CompScheme::arlp_threshold;
  p.arlp_floor = floor_watts;
  return p;
}

CompPolicy CompPolicy::no_comp() {
  CompPolicy p;
  p.scheme = CompScheme::no_comp;
  return p;
}

std::string CompPolicy::label() const {
  std::ostringstream os;
  os.precision(6);
  switch (scheme) {
  case CompScheme::rrlp:
    if (eta.size() > 0 && (eta.array() == eta(0, 0)).all())
      os << "rrlp(eta_db=" << ratio_to_db(eta(0, 0)) << ")";
    else
      os << "rrlp(matrix)";
    break;
  case CompScheme::fnsb:
    os << "fnsb(n=" << n_strongest << ")";
    break;
  case CompScheme::arlp_threshold:
    os << "arlp(floor_dbm=" << watts_to_dbm(arlp_floor) << ")";
    break;
  case CompScheme::no_comp:
    os << "no_comp";
    break;
  }
  return os.str();
}

void CompPolicy::validate(int num_tiers) const {
  switch (scheme) {
  case CompScheme::rrlp:
    require(eta.rows() == num_tiers && eta.cols() == num_tiers,
            "eta must be a K x K matrix");
    require((eta.array() > 0).all() && (eta.array() <= 1).all(),
            "every eta entry must lie in (0,1]");
    break;
  case CompScheme::fnsb:
    require(n_strongest >= 1, "n_strongest must be >= 1");
    break;
  case CompScheme::arlp_threshold:
    require(finite_positive(arlp_floor), "arlp floor must be > 0");
    break;
  case CompScheme::no_comp:
    break;
  }
}

PowerModel PowerModel::defaults(int num_tiers) {
  PowerModel p;
  p.antenna_power_bs = Eigen::VectorXd::Constant(num_tiers, 1.0);
  p.fixed_power = Eigen::VectorXd::Constant(num_tiers, 18.0);
  p.pa_efficiency = Eigen::VectorXd::Constant(num_tiers, 0.39);
  p.compute_efficiency = Eigen::VectorXd::Constant(num_tiers, 12.8e9);
  return p;
}

void PowerModel::validate(int num_tiers) const {
  auto ok = [&](const Eigen::VectorXd &v) {
    return v.size() == num_tiers && v.allFinite() && (v.array() > 0).all();
  };
  require(ok(antenna_power_bs), "power.antenna_power_bs must hold K positive values");
  require(ok(fixed_power), "power.fixed_power must hold K positive values");
  require(ok(pa_efficiency) && (pa_efficiency.array() <= 1).all(),
          "power.pa_efficiency must hold K values in (0,1]");
  require(ok(compute_efficiency), "power.compute_efficiency must hold K positive values");
  require(finite_positive(antenna_power_ue), "power.antenna_power_ue must be > 0");
  require(finite_positive(rate_power), "power.rate_power must be > 0");
  require(finite_positive(bandwidth), "power.bandwidth must be > 0");
  require(finite_positive(coherence_block), "power.coherence_block must be > 0");
}

NetworkModel default_two_tier(double total_density, double tier1_share) {
  NetworkModel m;
  for (int j = 0; j < 2; ++j)
    m.tiers.push_back(default_tier(j));
  m.tiers[0].density = tier1_share * total_density;
  m.tiers[1].density = (1.0 - tier1_share) * total_density;
  return m;
}

NetworkModel with_total_density(const NetworkModel &m, double total) {
  NetworkModel out = m;
  const double old = m.total_density();
  for (auto &t : out.tiers)
    t.density = old > 0 ? t.density * total / old : total / out.num_tiers();
  return out;
}

NetworkModel with_tier1_share(const NetworkModel &m, double share) {
  if (m.num_tiers() != 2)
    throw ConfigError("density ratio axis needs exactly two tiers");
  NetworkModel out = m;
  const double total = m.total_density();
  out.tiers[0].density = share * total;
  out.tiers[1].density = (1.0 - share) * total;
  return out;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace {

template <typename T> T get_or(const json &j, const char *key, T fallback) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null())
    return fallback;
  return j.at(key).get<T>();
}

Eigen::VectorXd per_tier(const json &j, const char *key, const Eigen::VectorXd &fallback) {
  if (!j.is_object() || !j.contains(key))
    return fallback;
  const json &v = j.at(key);
  Eigen::VectorXd out = fallback;
  if (v.is_number()) {
    out.setConstant(v.get<double>());
  } else if (v.is_array()) {
    require(static_cast<Eigen::Index>(v.size()) == fallback.size(),
            std::string("power.") + key + " must list one value per tier");
    for (std::size_t i = 0; i < v.size(); ++i)
      out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
  } else {
    require(false, std::string("power.") + key + " must be a number or array");
  }
  return out;
}

int integer_shape(const json &j, const char *key, int fallback) {
  if (!j.is_object() || !j.contains(key))
    return fallback;
  const double v = j.at(key).get<double>();
  require(v == std::floor(v), std::string("channel.") + key + " must be an integer");
  return static_cast<int>(v);
}

json vector_json(const Eigen::VectorXd &v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    a.push_back(v[i]);
  return a;
}

} // namespace

Scenario parse_scenario(const std::string &text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error &e) {
    throw ConfigError(std::string("malformed scenario file: ") + e.what());
  }
  try {
    require(doc.is_object(), "top level must be a JSON object");
    require(doc.contains("tiers") && doc["tiers"].is_array() && !doc["tiers"].empty(),
            "'tiers' must be a non-empty array");

    Scenario s;
    NetworkModel &m = s.model;
    const json &tiers = doc["tiers"];
    for (std::size_t j = 0; j < tiers.size(); ++j) {
      const json &t = tiers[j];
      TierParams tp = default_tier(static_cast<int>(j));
      tp.density = per_km2_to_per_m2(get_or<double>(t, "density_per_km2", 0.0));
      tp.tx_power = dbm_to_watts(get_or<double>(t, "tx_power_dbm", watts_to_dbm(tp.tx_power)));
      tp.antenna_height = get_or<double>(t, "antenna_height_m", tp.antenna_height);
      const auto dep = get_or<std::string>(t, "deployment", "ppp");
      require(dep == "ppp" || dep == "hex" || dep == "hex_grid",
              "deployment must be 'ppp' or 'hex'");
      tp.deployment = dep == "ppp" ? Deployment::ppp : Deployment::hex_grid;
      m.tiers.push_back(tp);
    }
    const int K = m.num_tiers();

    const json user = doc.value("user", json::object());
    m.user_height = get_or<double>(user, "height_m", m.user_height);
    m.user_density = per_km2_to_per_m2(
        get_or<double>(user, "density_per_km2", per_m2_to_per_km2(m.user_density)));

    const json blk = doc.value("blockage", json::object());
    auto &b = m.blockage;
    b.built_fraction = get_or<double>(blk, "epsilon", b.built_fraction);
    b.building_density = per_km2_to_per_m2(
        get_or<double>(blk, "buildings_per_km2", per_m2_to_per_km2(b.building_density)));
    b.mean_height = get_or<double>(blk, "mean_height_m", b.mean_height);
    const auto los = get_or<std::string>(blk, "los_model", "height_aware");
    require(los == "height_aware" || los == "none", "blockage.los_model must be 'height_aware' or 'none'");
    b.los_enabled = los == "height_aware";
    const auto base = get_or<std::string>(blk, "blockage_base_height", "height_difference");
    require(base == "height_difference" || base == "bs_height",
            "blockage.blockage_base_height must be 'height_difference' or 'bs_height'");
    b.base_height = base == "bs_height" ? BlockageBaseHeight::bs_height
                                        : BlockageBaseHeight::height_difference;

    const json ch = doc.value("channel", json::object());
    auto &c = m.channel;
    c.alpha_los = get_or<double>(ch, "alpha_los", c.alpha_los);
    c.alpha_nlos = get_or<double>(ch, "alpha_nlos", c.alpha_nlos);
    c.m_los = integer_shape(ch, "m_los", c.m_los);
    c.m_nlos = integer_shape(ch, "m_nlos", c.m_nlos);

    const json comp = doc.value("comp", json::object());
    const auto scheme = get_or<std::string>(comp, "scheme", "rrlp");
    CompPolicy &p = s.policy;
    if (scheme == "rrlp") {
      p.scheme = CompScheme::rrlp;
      p.eta = Eigen::MatrixXd::Constant(K, K, db_to_ratio(-5.85));
      if (comp.contains("eta_db")) {
        const json &e = comp["eta_db"];
        if (e.is_number()) {
          p.eta.setConstant(db_to_ratio(e.get<double>()));
        } else {
          require(e.is_array() && static_cast<int>(e.size()) == K,
                  "comp.eta_db must be a number or a K x K matrix");
          for (int j = 0; j < K; ++j) {
            require(e[j].is_array() && static_cast<int>(e[j].size()) == K,
                    "comp.eta_db must be a number or a K x K matrix");
            for (int k = 0; k < K; ++k)
              p.eta(j, k) = db_to_ratio(e[j][k].get<double>());
          }
        }
      }
    } else if (scheme == "fnsb") {
      p.scheme = CompScheme::fnsb;
    } else if (scheme == "arlp_threshold" || scheme == "arlp") {
      p.scheme = CompScheme::arlp_threshold;
    } else if (scheme == "no_comp") {
      p.scheme = CompScheme::no_comp;
    } else {
      require(false, "comp.scheme must be one of rrlp, fnsb, arlp_threshold, no_comp");
    }
    p.n_strongest = get_or<int>(comp, "n_strongest", p.n_strongest);
    p.arlp_floor = dbm_to_watts(get_or<double>(comp, "arlp_floor_dbm", -60.0));

    const json pw = doc.value("power", json::object());
    PowerModel &pm = s.power;
    pm = PowerModel::defaults(K);
    pm.antenna_power_bs = per_tier(pw, "antenna_power_bs_w", pm.antenna_power_bs);
    pm.fixed_power = per_tier(pw, "fixed_power_w", pm.fixed_power);
    pm.pa_efficiency = per_tier(pw, "pa_efficiency", pm.pa_efficiency);
    pm.compute_efficiency = per_tier(pw, "compute_efficiency_flops_per_w", pm.compute_efficiency);
    pm.antenna_power_ue = get_or<double>(pw, "antenna_power_ue_w", pm.antenna_power_ue);
    pm.rate_power = get_or<double>(pw, "rate_power_w_per_bps", pm.rate_power);
    pm.bandwidth = get_or<double>(pw, "bandwidth_hz", pm.bandwidth);
    pm.coherence_block = get_or<double>(pw, "coherence_block", pm.coherence_block);
    const auto pa = get_or<std::string>(pw, "pa_term", "divide_by_efficiency");
    require(pa == "divide_by_efficiency" || pa == "multiply_literal",
            "power.pa_term must be 'divide_by_efficiency' or 'multiply_literal'");
    pm.pa_term = pa == "multiply_literal" ? PaTerm::multiply_literal
                                          : PaTerm::divide_by_efficiency;

    const json sim = doc.value("sim", json::object());
    s.sim.window_radius = get_or<double>(sim, "window_radius_m", 0.0);
    s.sim.neglect_fraction = get_or<double>(sim, "neglect_fraction", s.sim.neglect_fraction);
    s.sim.trials = get_or<std::int64_t>(sim, "trials", s.sim.trials);
    s.sim.seed = get_or<std::uint64_t>(sim, "seed", s.sim.seed);
    s.sir_threshold = db_to_ratio(get_or<double>(sim, "sir_threshold_db", 0.0));

    m.validate();
    p.validate(K);
    pm.validate(K);
    require(s.sim.window_radius >= 0, "sim.window_radius_m must be >= 0");
    require(s.sim.neglect_fraction > 0 && s.sim.neglect_fraction < 1,
            "sim.neglect_fraction must lie in (0,1)");
    require(s.sim.trials >= 1, "sim.trials must be >= 1");
    return s;
  } catch (const json::exception &e) {
    throw ConfigError(std::string("scenario field has the wrong type: ") + e.what());
  }
}

Scenario load_scenario(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open scenario file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string serialize_scenario(const Scenario &s) {
  const NetworkModel &m = s.model;
  json doc;
  json tiers = json::array();
  for (const auto &t : m.tiers) {
    tiers.push_back({{"density_per_km2", per_m2_to_per_km2(t.density)},
                     {"tx_power_dbm", watts_to_dbm(t.tx_power)},
                     {"antenna_height_m", t.antenna_height},
                     {"deployment", t.deployment == Deployment::ppp ? "ppp" : "hex"}});
  }
  doc["tiers"] = tiers;
  doc["user"] = {{"height_m", m.user_height},
                 {"density_per_km2", per_m2_to_per_km2(m.user_density)}};
  const auto &b = m.blockage;
  doc["blockage"] = {
      {"epsilon", b.built_fraction},
      {"buildings_per_km2", per_m2_to_per_km2(b.building_density)},
      {"mean_height_m", b.mean_height},
      {"los_model", b.los_enabled ? "height_aware" : "none"},
      {"blockage_base_height",
       b.base_height == BlockageBaseHeight::bs_height ? "bs_height" : "height_difference"}};
  const auto &c = m.channel;
  doc["channel"] = {{"alpha_los", c.alpha_los},
                    {"alpha_nlos", c.alpha_nlos},
                    {"m_los", c.m_los},
                    {"m_nlos", c.m_nlos}};

  const CompPolicy &p = s.policy;
  json comp = {{"scheme", p.scheme == CompScheme::arlp_threshold ? "arlp_threshold"
                                                                 : to_string(p.scheme)},
               {"n_strongest", p.n_strongest},
               {"arlp_floor_dbm", watts_to_dbm(p.arlp_floor)}};
  if (p.scheme == CompScheme::rrlp) {
    json e = json::array();
    for (Eigen::Index j = 0; j < p.eta.rows(); ++j) {
      json row = json::array();
      for (Eigen::Index k = 0; k < p.eta.cols(); ++k)
        row.push_back(ratio_to_db(p.eta(j, k)));
      e.push_back(row);
    }
    comp["eta_db"] = e;
  }
  doc["comp"] = comp;

  const PowerModel &pm = s.power;
  doc["power"] = {
      {"antenna_power_bs_w", vector_json(pm.antenna_power_bs)},
      {"fixed_power_w", vector_json(pm.fixed_power)},
      {"pa_efficiency", vector_json(pm.pa_efficiency)},
      {"compute_efficiency_flops_per_w", vector_json(pm.compute_efficiency)},
      {"antenna_power_ue_w", pm.antenna_power_ue},
      {"rate_power_w_per_bps", pm.rate_power},
      {"bandwidth_hz", pm.bandwidth},
      {"coherence_block", pm.coherence_block},
      {"pa_term", pm.pa_term == PaTerm::multiply_literal ? "multiply_literal"
                                                         : "divide_by_efficiency"}};
  doc["sim"] = {{"window_radius_m", s.sim.window_radius},
                {"neglect_fraction", s.sim.neglect_fraction},
                {"trials", s.sim.trials},
                {"seed", s.sim.seed},
                {"sir_threshold_db", std::round(ratio_to_db(s.sir_threshold) * 1e9) / 1e9}};
  return doc.dump(2);
}

} // namespace udn
