#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace bdett {

// One verification suite's outcome. Soft suites report but never gate.
struct SuiteResult {
  std::string name;
  bool pass = false;
  bool blocking = true;
  double seconds = 0.0;
  std::string detail;
};

struct VerifyOptions {
  // Test hook: offsets the eta constant inside the energy-threshold golden
  // checks so the suite's sensitivity can itself be tested.
  double eta_perturbation = 0.0;
  unsigned jobs = 1;
  bool goldens_only = false;  // run just the formula-golden suite
};

// Runs every golden-value, property and end-to-end suite, streaming one
// pass/fail line per suite to `progress`.
std::vector<SuiteResult> run_verify(const VerifyOptions& opts,
                                    std::ostream& progress);

bool all_blocking_passed(const std::vector<SuiteResult>& results);

}  // namespace bdett
