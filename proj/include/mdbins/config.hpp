#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "mdbins/core.hpp"
#include "mdbins/errors.hpp"
#include "mdbins/processes.hpp"

namespace mdbins {

/// Checkpoints 0, n, 2n, 4n, ... up to m, plus m itself.
inline std::vector<std::uint64_t> default_checkpoints(std::size_t n, std::uint64_t m) {
  std::vector<std::uint64_t> cps{0};
  for (std::uint64_t t = n; t > 0 && t < m; t *= 2) cps.push_back(t);
  if (m > 0) cps.push_back(m);
  return cps;
}

struct AllocationConfig {
  std::size_t n = 1;
  std::size_t dims = 1;
  std::uint64_t m = 0;
  BallSourceSpec source = BallSourceSpec::fixed_uniform(1);
  ProcessSpec process = ProcessSpec::d_choice(2);
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> checkpoints;  // empty: default_checkpoints(n, m)

  std::vector<std::uint64_t> effective_checkpoints() const {
    return checkpoints.empty() ? default_checkpoints(n, m) : checkpoints;
  }

  void validate() const {
    if (n < 1) throw config_error("n must be >= 1");
    if (dims < 1) throw config_error("D must be >= 1");
    source.validate(dims);
    process.validate(n);
    if (!std::is_sorted(checkpoints.begin(), checkpoints.end()) ||
        std::adjacent_find(checkpoints.begin(), checkpoints.end()) != checkpoints.end())
      throw config_error("checkpoints must be strictly ascending");
    if (!checkpoints.empty() && checkpoints.back() > m)
      throw config_error("checkpoints must not exceed m");
  }
};

}  // namespace mdbins
