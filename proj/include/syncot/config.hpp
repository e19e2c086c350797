#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "syncot/problems.hpp"
#include "syncot/solver.hpp"

namespace syncot {

struct OutputSpec {
  std::string dir = "run";
  int snapshot_stride = 0;  // 0 keeps only the final iterate
};

struct RunConfig {
  std::string preset;  // empty when built from scratch
  ProblemSpec problem;
  std::string map_table;  // SOT1 file for the tabulated map variant
  SolverConfig solver;
  OutputSpec output;
};

// Line-oriented `dotted.key = value` text with `#` comments. A `preset` key
// expands first; all other keys override it regardless of their position.
// Throws ConfigError whose message starts with "line N:".
RunConfig parse_config(std::string_view text);
// Canonical dump: every key, fixed order, shortest round-trip numbers.
std::string dump_config(const RunConfig& cfg);
// Cross-field validation shared by parse_config and programmatic callers.
void validate(const RunConfig& cfg);
// Resolves marginals, map tables and the metric.
Problem build_problem(const RunConfig& cfg);

const std::vector<std::string>& preset_ids();
RunConfig load_preset(const std::string& id);

}  // namespace syncot
