#pragma once

// Property suites behind `ttriple check`. Each check measures a worst-case
// value and compares it with a threshold.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ttriple {

struct SuiteOptions {
  std::uint64_t seed = 0;
  int trials = 100;
  std::optional<double> tol;  // replaces every upper-bound threshold when set
};

enum class Comparison { at_most, at_least };

struct PropertyResult {
  std::string suite;
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  Comparison comparison = Comparison::at_most;
  bool pass = false;
  std::string detail;
};

struct Check {
  std::string suite;
  std::string name;
  std::function<std::vector<PropertyResult>(const SuiteOptions&)> run;
};

/// "bundles", "theorem1", "mechanics", "field", "models".
const std::vector<std::string>& suite_names();
const std::vector<Check>& checks();

/// Runs one check and applies the threshold override.
std::vector<PropertyResult> run_check(const Check& c, const SuiteOptions& opts);
/// Runs every check of a suite; "all" runs every suite.
std::vector<PropertyResult> run_suite(const std::string& suite, const SuiteOptions& opts);

}  // namespace ttriple
