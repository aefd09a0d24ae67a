#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace dlca::selftest {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Always-on property suite: superoperator invariants, dark states, Born
// statistics, projective-attack t*-independence, softmax normalization,
// determinism by seed, dataset round-trips. Fast enough to run routinely.
std::vector<CheckResult> run_selftest(int workers, std::ostream* log = nullptr);

bool all_passed(const std::vector<CheckResult>& results);

}  // namespace dlca::selftest
