#pragma once

// Trajectory CSV. Columns, in order:
//   point,trial,seed,t,max_gap,sum_gap,ball_count_gap,phi,psi,gamma,rounds_used
// `point` is the sweep point index (0 without a sweep). Potentials and
// rounds_used are empty when not recorded; a diverged potential is `inf`.
// Reals use the shortest representation that parses back exactly.

#include <charconv>
#include <cstdint>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "mdbins/errors.hpp"
#include "mdbins/trajectory.hpp"

namespace mdbins {

inline constexpr std::string_view kCsvHeader =
    "point,trial,seed,t,max_gap,sum_gap,ball_count_gap,phi,psi,gamma,rounds_used";

inline std::string format_real(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline void write_csv_rows(std::ostream& out, std::uint64_t point, const TrajectoryRecord& rec) {
  auto opt_real = [](const std::optional<double>& v) { return v ? format_real(*v) : std::string(); };
  for (const auto& r : rec.rows) {
    out << point << ',' << rec.trial << ',' << rec.seed << ',' << r.t << ','
        << format_real(r.max_gap) << ',' << format_real(r.sum_gap) << ','
        << format_real(r.ball_count_gap) << ',' << opt_real(r.phi) << ',' << opt_real(r.psi) << ','
        << opt_real(r.gamma) << ',' << (r.rounds_used ? std::to_string(*r.rounds_used) : "")
        << '\n';
  }
}

struct CsvTrajectory {
  std::uint64_t point = 0;
  TrajectoryRecord record;
  bool operator==(const CsvTrajectory&) const = default;
};

namespace csv_detail {

template <class T>
T parse_field(std::string_view f, std::size_t lineno) {
  T v{};
  auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (ec != std::errc() || ptr != f.data() + f.size())
    throw config_error("csv line " + std::to_string(lineno) + ": bad field '" + std::string(f) + "'");
  return v;
}

template <class T>
std::optional<T> parse_optional(std::string_view f, std::size_t lineno) {
  if (f.empty()) return std::nullopt;
  return parse_field<T>(f, lineno);
}

}  // namespace csv_detail

/// Parses CSV text back into per-trial records, grouping consecutive rows
/// with the same (point, trial).
inline std::vector<CsvTrajectory> parse_csv(std::string_view text) {
  using namespace csv_detail;
  std::vector<CsvTrajectory> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1) {
      if (line != kCsvHeader) throw config_error("csv: unexpected header");
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      f.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (f.size() != 11) throw config_error("csv line " + std::to_string(lineno) + ": expected 11 fields");
    const auto point = parse_field<std::uint64_t>(f[0], lineno);
    const auto trial = parse_field<std::uint64_t>(f[1], lineno);
    if (out.empty() || out.back().point != point || out.back().record.trial != trial) {
      out.push_back({point, {}});
      out.back().record.trial = trial;
      out.back().record.seed = parse_field<std::uint64_t>(f[2], lineno);
    }
    CheckpointRow r;
    r.t = parse_field<std::uint64_t>(f[3], lineno);
    r.max_gap = parse_field<double>(f[4], lineno);
    r.sum_gap = parse_field<double>(f[5], lineno);
    r.ball_count_gap = parse_field<double>(f[6], lineno);
    r.phi = parse_optional<double>(f[7], lineno);
    r.psi = parse_optional<double>(f[8], lineno);
    r.gamma = parse_optional<double>(f[9], lineno);
    r.rounds_used = parse_optional<std::uint64_t>(f[10], lineno);
    out.back().record.rows.push_back(r);
    out.back().record.rounds_used = r.rounds_used;
  }
  return out;
}

}  // namespace mdbins
