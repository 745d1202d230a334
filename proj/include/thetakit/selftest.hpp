#pragma once

#include <string>
#include <vector>

namespace thetakit {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

struct SelftestOptions {
  unsigned seed = 1;
  std::vector<int> only;  ///< empty: all of 1..16
};

inline constexpr int kCriterionCount = 16;

CriterionResult run_criterion(int id, unsigned seed = 1);
std::vector<CriterionResult> run_selftest(const SelftestOptions& opts = {});

}  // namespace thetakit
