#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace fracslice {

struct CriterionResult {
  int number = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0;
};

/// The full self-test: eleven criteria with tolerances pinned in code, one
/// [PASS]/[FAIL] line each on `out`, CSV artifacts under `out_dir`.  The
/// artifacts are byte-stable for a fixed seed; record.txt carries timings.
std::vector<CriterionResult> run_acceptance(uint64_t seed, const std::string& out_dir,
                                            std::ostream& out);

/// True when every criterion passed.
bool all_passed(const std::vector<CriterionResult>& results);

}  // namespace fracslice
