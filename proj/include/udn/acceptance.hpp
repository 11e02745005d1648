#pragma once

#include "udn/model.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace udn::acceptance {

enum class Level { fast, full };

struct Verdict {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
  std::vector<std::pair<std::string, double>> values;
};

struct Options {
  Level level = Level::fast;
  int workers = 1;
  std::uint64_t seed = 20240601;
  std::vector<int> only; // empty runs every criterion
  std::function<void(const Verdict &)> on_verdict;
};

/// Runs the acceptance criteria on the given two-tier base network.
std::vector<Verdict> run(const NetworkModel &base, const Options &opt);

/// Stock two-tier network used when no scenario is given.
NetworkModel reference_network();

std::string to_string(Level l);
Level parse_level(const std::string &s);

} // namespace udn::acceptance
