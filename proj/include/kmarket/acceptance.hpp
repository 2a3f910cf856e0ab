#pragma once

// End-to-end acceptance checks with tolerances fixed in code.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace kmarket {

struct CriterionResult {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

/// Suite names accepted by run_acceptance: "all" or one criterion name.
std::vector<std::string> acceptance_suites();

/// Runs the named suite. Throws ConfigError for an unknown name.
std::vector<CriterionResult> run_acceptance(std::string_view suite,
                                            std::uint64_t seed = 1);

/// "PASS name value=... tol=... detail" formatting.
std::string format_result(const CriterionResult& r);

}  // namespace kmarket
