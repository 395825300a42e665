#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "config.hpp"

namespace ssridge::cli {

/// Heatmap of ensemble risks over the (lambda, psi) grid. Writes
/// <out>/sweep.csv and returns its path.
std::string cmd_sweep(const ExperimentConfig& config);

/// Equivalence paths through each anchor. Writes <out>/path.csv and
/// <out>/path_summary.csv; returns the path of the former.
std::string cmd_path(const ExperimentConfig& config);

struct CheckResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string detail;
};

/// Runs the invariant suite and writes <out>/check.json. `log` gets one
/// PASS/FAIL line per invariant.
std::vector<CheckResult> cmd_check(const ExperimentConfig& config, std::ostream& log);

}  // namespace ssridge::cli
