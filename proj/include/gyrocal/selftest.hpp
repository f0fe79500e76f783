#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gyrocal {

struct SelfTestResult {
  std::string name;
  bool passed{false};
  std::string detail;
};

/// Quick runtime invariant suite: mechanization round trip, Joseph-form
/// update agreement, Gauss-Markov stationary variance, two-vector alignment,
/// static-stream bias averaging and covariance health over a short run.
std::vector<SelfTestResult> run_selftest(std::uint64_t seed = 1);

}  // namespace gyrocal
