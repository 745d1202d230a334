#include <chrono>
#include <cstdio>

#include "thetakit/selftest.hpp"

int main() {
  using namespace thetakit;
  auto t0 = std::chrono::steady_clock::now();
  int failures = 0;
  for (int id = 1; id <= kCriterionCount; ++id) {
    CriterionResult r = run_criterion(id);
    std::printf("[%s] %2d %-28s %s (%.2f s)\n", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(), r.detail.c_str(),
                r.seconds);
    std::fflush(stdout);
    failures += !r.pass;
  }
  double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  bool ok = total < 600.0;
  std::printf("[%s] 17 %-28s %.2f s\n", ok ? "PASS" : "FAIL", "selftest wall time", total);
  failures += !ok;
  return failures == 0 ? 0 : 1;
}
