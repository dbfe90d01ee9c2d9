#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace mdbins {

/// Metrics of one trial at one ball count.
struct CheckpointRow {
  std::uint64_t t = 0;
  double max_gap = 0.0;
  double sum_gap = 0.0;
  double ball_count_gap = 0.0;
  std::optional<double> phi;
  std::optional<double> psi;
  std::optional<double> gamma;
  std::optional<std::uint64_t> rounds_used;

  bool operator==(const CheckpointRow&) const = default;
};

struct TrajectoryRecord {
  std::uint64_t trial = 0;
  std::uint64_t seed = 0;
  std::vector<CheckpointRow> rows;
  std::optional<std::uint64_t> rounds_used;  // parallel-rounds only

  const CheckpointRow& final_row() const { return rows.back(); }
  bool operator==(const TrajectoryRecord&) const = default;
};

}  // namespace mdbins
