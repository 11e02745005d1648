#include "udn/acceptance.hpp"
#include "udn/analytic.hpp"
#include "udn/association.hpp"
#include "udn/geometry.hpp"
#include "udn/model.hpp"
#include "udn/report.hpp"
#include "udn/sim_engine.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#ifndef UDN_CODE_VERSION
#define UDN_CODE_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace udn;

namespace {

enum Exit { ok = 0, usage = 1, config = 2, numeric = 3, acceptance_failed = 4 };

enum class Axis { total_density, density_ratio, sir_threshold, target_n_avg };

const char *axis_name(Axis a) {
  switch (a) {
  case Axis::total_density:
    return "total_density_per_km2";
  case Axis::density_ratio:
    return "density_ratio";
  case Axis::sir_threshold:
    return "sir_threshold_db";
  case Axis::target_n_avg:
    return "target_n_avg";
  }
  return "";
}

Axis parse_axis(const std::string &s) {
  if (s == "density" || s == "total_density")
    return Axis::total_density;
  if (s == "ratio" || s == "density_ratio")
    return Axis::density_ratio;
  if (s == "threshold" || s == "sir_threshold")
    return Axis::sir_threshold;
  if (s == "target_n" || s == "target_n_avg")
    return Axis::target_n_avg;
  throw ConfigError("unknown sweep axis '" + s + "'");
}

// Scheme as given on the command line. An rrlp entry without a fixed eta is
// calibrated at every grid point.
struct SchemeSpec {
  std::string text;
  CompScheme scheme = CompScheme::rrlp;
  std::optional<double> eta_db;
  std::optional<double> target_n;
  int n_strongest = 2;
  double floor_dbm = -60.0;
  bool from_scenario = false;
};

double parse_number(const std::string &s, const std::string &what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size())
      return v;
  } catch (const std::exception &) {
  }
  throw ConfigError("bad number '" + s + "' in " + what);
}

SchemeSpec parse_scheme(const std::string &text) {
  SchemeSpec s;
  s.text = text;
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (head == "scenario") {
    s.from_scenario = true;
  } else if (head == "rrlp") {
    s.scheme = CompScheme::rrlp;
    if (arg.rfind("n=", 0) == 0)
      s.target_n = parse_number(arg.substr(2), text);
    else if (arg.rfind("eta_db=", 0) == 0)
      s.eta_db = parse_number(arg.substr(7), text);
    else if (!arg.empty())
      throw ConfigError("rrlp takes n=<target> or eta_db=<dB>, got '" + text + "'");
  } else if (head == "fnsb") {
    s.scheme = CompScheme::fnsb;
    if (!arg.empty())
      s.n_strongest = static_cast<int>(parse_number(arg, text));
  } else if (head == "arlp" || head == "arlp_threshold") {
    s.scheme = CompScheme::arlp_threshold;
    if (!arg.empty())
      s.floor_dbm = parse_number(arg, text);
  } else if (head == "no_comp") {
    s.scheme = CompScheme::no_comp;
  } else {
    throw ConfigError("unknown scheme '" + text + "'");
  }
  return s;
}

struct Common {
  std::string scenario;
  std::string out;
  std::int64_t trials = 0; // 0 keeps the scenario value
  std::uint64_t seed = 0;
  bool seed_given = false;
  int workers = 1;
  std::string path = "mc";
  int inner_samples = 256; // analytic inner MC samples per outer node
};

Scenario load(const Common &c) {
  Scenario s;
  if (c.scenario.empty()) {
    s.model = acceptance::reference_network();
    s.policy = CompPolicy::rrlp(s.model.num_tiers(), db_to_ratio(-5.85));
    s.power = PowerModel::defaults(s.model.num_tiers());
  } else {
    s = load_scenario(c.scenario);
  }
  if (c.trials > 0)
    s.sim.trials = c.trials;
  if (c.seed_given)
    s.sim.seed = c.seed;
  return s;
}

struct Paths {
  bool mc = true;
  bool analytic = false;
};

Paths parse_paths(const std::string &p) {
  if (p == "mc")
    return {true, false};
  if (p == "analytic")
    return {false, true};
  if (p == "both")
    return {true, true};
  throw ConfigError("--path must be mc, analytic or both");
}

const char *kMetrics[] = {"coverage", "per_user_se", "rx_ase",  "tx_ase",
                          "mean_comp_size", "tx_nee", "rx_nee"};

struct SweepSpec {
  Axis axis = Axis::total_density;
  std::vector<double> grid;
  std::vector<SchemeSpec> schemes;
  Paths paths;
  std::vector<std::string> metrics;
};

void check_grid(const std::vector<double> &grid) {
  if (grid.empty())
    throw ConfigError("sweep grid is empty");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1]))
      throw ConfigError("sweep grid must be strictly increasing");
}

struct PointOutput {
  std::map<std::string, std::vector<CsvRow>> rows;
  json status;
};

CompPolicy resolve(const SchemeSpec &spec, const Scenario &s, const NetworkModel &m,
                   std::optional<double> axis_target) {
  if (spec.from_scenario)
    return s.policy;
  const int K = m.num_tiers();
  switch (spec.scheme) {
  case CompScheme::rrlp: {
    if (spec.eta_db)
      return CompPolicy::rrlp(K, db_to_ratio(*spec.eta_db));
    const double target = spec.target_n ? *spec.target_n : axis_target.value_or(0.0);
    if (!(target >= 1.0))
      throw ConfigError("rrlp scheme '" + spec.text + "' needs n=<target> or eta_db=<dB>");
    return CompPolicy::rrlp(K, calibrate_eta(m, target).eta);
  }
  case CompScheme::fnsb:
    return CompPolicy::fnsb(spec.n_strongest);
  case CompScheme::arlp_threshold:
    return CompPolicy::arlp_threshold(dbm_to_watts(spec.floor_dbm));
  case CompScheme::no_comp:
    return CompPolicy::no_comp();
  }
  return CompPolicy::no_comp();
}

CsvRow row(double axis, const std::string &scheme, const char *path, const MetricValue &v) {
  return {axis, scheme, path, v.value, v.ci_lo, v.ci_hi};
}

PointOutput run_point(const Scenario &s, const SweepSpec &sw, double axis_value,
                      const Common &c) {
  PointOutput out;
  const auto t0 = std::chrono::steady_clock::now();
  out.status["axis_value"] = axis_value;
  try {
    NetworkModel m = s.model;
    double threshold = s.sir_threshold;
    std::optional<double> target;
    switch (sw.axis) {
    case Axis::total_density:
      m = with_total_density(m, per_km2_to_per_m2(axis_value));
      break;
    case Axis::density_ratio:
      m = with_tier1_share(m, axis_value);
      break;
    case Axis::sir_threshold:
      threshold = db_to_ratio(axis_value);
      break;
    case Axis::target_n_avg:
      target = axis_value;
      break;
    }
    m.validate();

    std::vector<CompPolicy> policies;
    std::vector<std::string> labels;
    json eta_used = json::object();
    for (const auto &spec : sw.schemes) {
      policies.push_back(resolve(spec, s, m, target));
      labels.push_back(spec.from_scenario ? policies.back().label() : spec.text);
      if (policies.back().scheme == CompScheme::rrlp)
        eta_used[labels.back()] = ratio_to_db(policies.back().eta(0, 0));
    }
    out.status["eta_db"] = eta_used;

    if (sw.paths.mc) {
      SimConfig cfg;
      cfg.trials = s.sim.trials;
      cfg.seed = s.sim.seed;
      cfg.window_radius = s.sim.window_radius;
      cfg.neglect_fraction = s.sim.neglect_fraction;
      cfg.workers = c.workers;
      const double t[1] = {threshold};
      auto reps = simulate(m, policies, t, cfg);
      std::uint64_t sentinel = 0;
      for (std::size_t p = 0; p < reps.size(); ++p) {
        MetricsReport &r = reps[p];
        nee(m, s.power, r);
        sentinel += r.sentinel_trials;
        auto &rows = out.rows;
        rows["coverage"].push_back(row(axis_value, labels[p], "mc", r.coverage));
        rows["per_user_se"].push_back(row(axis_value, labels[p], "mc", r.per_user_se));
        rows["rx_ase"].push_back(row(axis_value, labels[p], "mc", r.rx_ase));
        rows["tx_ase"].push_back(row(axis_value, labels[p], "mc", r.tx_ase));
        rows["mean_comp_size"].push_back(row(axis_value, labels[p], "mc", r.mean_comp_size));
        rows["tx_nee"].push_back(row(axis_value, labels[p], "mc", r.tx_nee));
        rows["rx_nee"].push_back(row(axis_value, labels[p], "mc", r.rx_nee));
      }
      out.status["window_radius_m"] = reps.front().window_radius;
      out.status["sentinel_trials"] = sentinel;
    }

    if (sw.paths.analytic) {
      json skipped = json::array();
      AnalyticOptions ao;
      ao.seed = s.sim.seed;
      ao.inner.inner_samples = c.inner_samples;
      for (std::size_t p = 0; p < policies.size(); ++p) {
        if (policies[p].scheme != CompScheme::rrlp) {
          skipped.push_back(labels[p]);
          continue;
        }
        const Eigen::MatrixXd &eta = policies[p].eta;
        auto &rows = out.rows;
        const bool want_cov = std::find(sw.metrics.begin(), sw.metrics.end(), "coverage") !=
                              sw.metrics.end();
        const bool want_se = std::any_of(sw.metrics.begin(), sw.metrics.end(), [](auto &x) {
          return x == "per_user_se" || x == "rx_ase";
        });
        if (want_cov) {
          const CoverageBracket b = coverage_analytic(m, eta, threshold, ao);
          rows["coverage"].push_back({axis_value, labels[p], "analytic", b.mid(), b.lower,
                                      b.upper});
        }
        if (want_se) {
          const RxAseResult a = rx_ase_analytic(m, eta, threshold, ao);
          rows["per_user_se"].push_back({axis_value, labels[p], "analytic", a.per_user_se,
                                         a.per_user_se_lower, a.per_user_se_upper});
          rows["rx_ase"].push_back({axis_value, labels[p], "analytic", a.rx_ase,
                                    a.per_user_se_lower * m.user_density,
                                    a.per_user_se_upper * m.user_density});
        }
        const double n = mean_comp_size_analytic(m, eta);
        rows["mean_comp_size"].push_back({axis_value, labels[p], "analytic", n, n, n});
      }
      if (!skipped.empty())
        out.status["analytic_skipped"] = skipped;
    }
    out.status["status"] = "ok";
  } catch (const ConfigError &e) {
    out.rows.clear();
    out.status["status"] = "config_error";
    out.status["message"] = e.what();
  } catch (const ParameterError &e) {
    out.rows.clear();
    out.status["status"] = "config_error";
    out.status["message"] = e.what();
  } catch (const std::exception &e) {
    out.rows.clear();
    out.status["status"] = "error";
    out.status["message"] = e.what();
  }
  out.status["seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

int emit_sweep(const Scenario &s, const SweepSpec &sw, const Common &c) {
  check_grid(sw.grid);
  const auto t0 = std::chrono::steady_clock::now();
  std::map<std::string, std::vector<CsvRow>> all;
  json status = json::array();
  bool failed = false;
  for (double v : sw.grid) {
    PointOutput p = run_point(s, sw, v, c);
    failed = failed || p.status["status"] != "ok";
    std::fprintf(stderr, "%s = %g: %s\n", axis_name(sw.axis), v,
                 p.status["status"].get<std::string>().c_str());
    for (auto &[metric, rows] : p.rows)
      all[metric].insert(all[metric].end(), rows.begin(), rows.end());
    status.push_back(std::move(p.status));
  }

  std::vector<std::string> metrics;
  for (const auto &m : sw.metrics)
    if (all.count(m))
      metrics.push_back(m);

  if (c.out.empty()) {
    for (const auto &m : metrics) {
      if (metrics.size() > 1)
        std::cout << "# " << m << '\n';
      write_csv(std::cout, all[m]);
    }
  } else {
    fs::create_directories(c.out);
    for (const auto &m : metrics) {
      std::ofstream f(fs::path(c.out) / (m + ".csv"), std::ios::binary);
      write_csv(f, all[m]);
    }
    json manifest;
    manifest["scenario"] = json::parse(serialize_scenario(s));
    json schemes = json::array();
    for (const auto &x : sw.schemes)
      schemes.push_back(x.text);
    json paths = json::array();
    if (sw.paths.mc)
      paths.push_back("mc");
    if (sw.paths.analytic)
      paths.push_back("analytic");
    manifest["sweep"] = {{"axis", axis_name(sw.axis)}, {"grid", sw.grid},
                         {"schemes", schemes},         {"paths", paths},
                         {"metrics", metrics}};
    manifest["seed"] = s.sim.seed;
    manifest["trials"] = s.sim.trials;
    manifest["workers"] = c.workers;
    manifest["inner_samples"] = c.inner_samples;
    manifest["code_version"] = UDN_CODE_VERSION;
    manifest["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." +
                                std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                std::to_string(EIGEN_MINOR_VERSION);
    manifest["wall_time_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    manifest["per_point_status"] = status;
    std::ofstream f(fs::path(c.out) / "manifest.json");
    f << manifest.dump(2) << '\n';
  }
  return failed ? Exit::numeric : Exit::ok;
}

int cmd_calibrate(const Common &c, std::vector<double> densities_km2,
                  std::vector<double> targets) {
  const Scenario s = load(c);
  check_grid(densities_km2);
  if (targets.empty())
    throw ConfigError("no target N_avg given");
  std::ostringstream os;
  os << "lambda_b,target_N,eta_db\n";
  for (double d : densities_km2) {
    const NetworkModel m = with_total_density(s.model, per_km2_to_per_m2(d));
    for (double t : targets) {
      const CalibrationResult r = calibrate_eta(m, t);
      char buf[128];
      std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.6f\n", per_km2_to_per_m2(d), t, r.eta_db);
      os << buf;
    }
  }
  if (c.out.empty()) {
    std::cout << os.str();
  } else {
    fs::create_directories(c.out);
    std::ofstream(fs::path(c.out) / "eta.csv", std::ios::binary) << os.str();
  }
  return Exit::ok;
}

int cmd_threshold_metrics(const Common &c, std::vector<double> thresholds_db,
                          std::vector<std::string> schemes,
                          std::vector<std::string> metrics) {
  const Scenario s = load(c);
  SweepSpec sw;
  sw.axis = Axis::sir_threshold;
  sw.grid = thresholds_db.empty() ? std::vector<double>{ratio_to_db(s.sir_threshold)}
                                  : thresholds_db;
  if (schemes.empty())
    schemes.push_back("scenario");
  for (const auto &x : schemes)
    sw.schemes.push_back(parse_scheme(x));
  sw.paths = parse_paths(c.path);
  sw.metrics = std::move(metrics);
  return emit_sweep(s, sw, c);
}

int cmd_validate(const Common &c, const std::string &level, std::vector<int> only) {
  acceptance::Options opt;
  opt.level = acceptance::parse_level(level);
  opt.workers = c.workers;
  if (c.seed_given)
    opt.seed = c.seed;
  opt.only = std::move(only);
  NetworkModel base = acceptance::reference_network();
  if (!c.scenario.empty()) {
    base = load_scenario(c.scenario).model;
    if (base.num_tiers() != 2)
      throw ConfigError("validation needs a two-tier scenario");
  }
  opt.on_verdict = [](const acceptance::Verdict &v) {
    std::fprintf(stderr, "%s criterion %d (%s): %s\n", v.passed ? "PASS" : "FAIL", v.id,
                 v.name.c_str(), v.detail.c_str());
  };
  const auto verdicts = acceptance::run(base, opt);
  json doc;
  doc["level"] = level;
  doc["seed"] = opt.seed;
  doc["code_version"] = UDN_CODE_VERSION;
  json list = json::array();
  bool all = true;
  for (const auto &v : verdicts) {
    json values = json::object();
    for (const auto &[k, x] : v.values)
      values[k] = x;
    list.push_back({{"id", v.id},
                    {"name", v.name},
                    {"passed", v.passed},
                    {"detail", v.detail},
                    {"seconds", v.seconds},
                    {"values", values}});
    all = all && v.passed;
  }
  doc["criteria"] = list;
  doc["passed"] = all;
  if (c.out.empty()) {
    std::cout << doc.dump(2) << '\n';
  } else {
    fs::create_directories(c.out);
    std::ofstream(fs::path(c.out) / "validation.json") << doc.dump(2) << '\n';
  }
  return all ? Exit::ok : Exit::acceptance_failed;
}

int cmd_dump(const Common &c, double radius) {
  const Scenario s = load(c);
  const double R = radius > 0 ? radius
                   : s.sim.window_radius > 0
                       ? s.sim.window_radius
                       : window_radius_for(s.model, s.sim.neglect_fraction);
  const BsRealization r = sample_realization(s.model, R, s.sim.seed);
  if (c.out.empty()) {
    write_realization_csv(std::cout, r);
  } else {
    fs::create_directories(c.out);
    std::ofstream f(fs::path(c.out) / "realization.csv", std::ios::binary);
    write_realization_csv(f, r);
  }
  return Exit::ok;
}

void add_common(CLI::App *sub, Common &c, bool with_path) {
  sub->add_option("--scenario", c.scenario, "scenario JSON file")->check(CLI::ExistingFile);
  sub->add_option("--out", c.out, "output directory (stdout when omitted)");
  sub->add_option("--trials", c.trials, "Monte Carlo trials")->check(CLI::PositiveNumber);
  sub->add_option_function<std::uint64_t>(
      "--seed", [&c](std::uint64_t s) { c.seed = s, c.seed_given = true; }, "base seed");
  sub->add_option("--workers", c.workers, "worker threads")->check(CLI::Range(1, 1024));
  if (with_path) {
    sub->add_option("--path", c.path, "mc, analytic or both")
        ->check(CLI::IsMember({"mc", "analytic", "both"}));
    sub->add_option("--inner-samples", c.inner_samples, "analytic inner samples per node")
        ->check(CLI::Range(16, 1 << 20));
  }
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"RRLP CoMP toolkit for multi-tier ultra-dense networks"};
  app.require_subcommand(1);
  Common c;

  auto *cal = app.add_subcommand("calibrate-eta", "eta giving a target mean CoMP size");
  std::vector<double> cal_dens = {10, 100, 1000, 5000, 10000, 50000};
  std::vector<double> cal_targets = {2, 3};
  add_common(cal, c, false);
  cal->add_option("--densities", cal_dens, "total densities per km^2")->delimiter(',');
  cal->add_option("--targets", cal_targets, "target mean CoMP sizes")->delimiter(',');

  std::vector<double> thr_db;
  std::vector<std::string> schemes;
  auto *cov = app.add_subcommand("coverage", "coverage probability");
  auto *ase = app.add_subcommand("ase", "spectral efficiency and area spectral efficiency");
  auto *ne = app.add_subcommand("nee", "network energy efficiency");
  for (auto *sub : {cov, ase, ne}) {
    add_common(sub, c, true);
    sub->add_option("--thresholds-db", thr_db, "SIR thresholds in dB")->delimiter(',');
    sub->add_option("--schemes", schemes, "schemes (default: the scenario policy)")
        ->delimiter(',');
  }

  auto *sweep = app.add_subcommand("sweep", "metric sweep over one axis");
  add_common(sweep, c, true);
  std::string axis = "density";
  std::vector<double> grid;
  std::vector<std::string> sweep_schemes = {"scenario"};
  std::vector<std::string> sweep_metrics(std::begin(kMetrics), std::end(kMetrics));
  sweep->add_option("--axis", axis, "density (per km^2), ratio, threshold (dB) or target_n");
  sweep->add_option("--grid", grid, "axis values")->delimiter(',');
  sweep->add_option("--schemes", sweep_schemes, "schemes")->delimiter(',');
  sweep->add_option("--metrics", sweep_metrics, "metrics to emit")->delimiter(',');

  auto *val = app.add_subcommand("validate", "acceptance criteria");
  add_common(val, c, false);
  std::string level = "fast";
  std::vector<int> only;
  val->add_option("--level", level, "fast or full")->check(CLI::IsMember({"fast", "full"}));
  val->add_option("--only", only, "criterion ids")->delimiter(',');

  auto *dump = app.add_subcommand("dump-realization", "one BS realization as CSV");
  add_common(dump, c, false);
  double radius = 0.0;
  dump->add_option("--radius", radius, "window radius in m (default: automatic)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? Exit::ok : Exit::usage;
  }

  try {
    if (*cal)
      return cmd_calibrate(c, cal_dens, cal_targets);
    if (*cov)
      return cmd_threshold_metrics(c, thr_db, schemes, {"coverage"});
    if (*ase)
      return cmd_threshold_metrics(c, thr_db, schemes, {"per_user_se", "rx_ase", "tx_ase"});
    if (*ne)
      return cmd_threshold_metrics(c, thr_db, schemes, {"tx_nee", "rx_nee"});
    if (*sweep) {
      const Scenario s = load(c);
      SweepSpec sw;
      sw.axis = parse_axis(axis);
      sw.grid = grid;
      for (const auto &x : sweep_schemes)
        sw.schemes.push_back(parse_scheme(x));
      sw.paths = parse_paths(c.path);
      for (const auto &m : sweep_metrics)
        if (std::find(std::begin(kMetrics), std::end(kMetrics), m) == std::end(kMetrics))
          throw ConfigError("unknown metric '" + m + "'");
      sw.metrics = sweep_metrics;
      return emit_sweep(s, sw, c);
    }
    if (*val)
      return cmd_validate(c, level, only);
    if (*dump)
      return cmd_dump(c, radius);
  } catch (const ConfigError &e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return Exit::config;
  } catch (const ParameterError &e) {
    std::fprintf(stderr, "invalid parameter: %s\n", e.what());
    return Exit::config;
  } catch (const NumericError &e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return Exit::numeric;
  } catch (const std::exception &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return Exit::numeric;
  }
  return Exit::usage;
}
