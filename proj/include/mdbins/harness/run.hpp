#pragma once

// Trial orchestration, aggregation and persistence for experiment plans.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "mdbins/errors.hpp"
#include "mdbins/harness/csv.hpp"
#include "mdbins/harness/plan.hpp"
#include "mdbins/metrics.hpp"
#include "mdbins/oracle.hpp"
#include "mdbins/potentials.hpp"
#include "mdbins/random.hpp"
#include "mdbins/runners.hpp"
#include "mdbins/trajectory.hpp"

namespace mdbins {

/// Worker count: MDBINS_WORKERS if set (>= 1), else hardware concurrency.
inline std::size_t worker_count() {
  if (const char* env = std::getenv("MDBINS_WORKERS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls fn(i) for i in [0, count) across workers. The first exception is
/// rethrown after all workers stop.
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn,
                         std::size_t workers = worker_count()) {
  workers = std::min(workers, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = count;
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// Statistics

inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return std::nan("");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  return sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - static_cast<double>(lo));
}

inline double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return quantile_sorted(values, 0.5);
}

inline double mean(const std::vector<double>& values) {
  double s = 0.0;
  for (double v : values) s += v;
  return values.empty() ? std::nan("") : s / static_cast<double>(values.size());
}

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

/// Percentile bootstrap interval for the mean.
inline Interval bootstrap_mean_ci(const std::vector<double>& values, std::uint64_t seed,
                                  std::size_t resamples = 1000, double level = 0.95) {
  if (values.empty()) return {std::nan(""), std::nan("")};
  Engine rng(seed);
  std::vector<double> means(resamples);
  for (auto& m : means) {
    double s = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) s += values[uniform_index(rng, values.size())];
    m = s / static_cast<double>(values.size());
  }
  std::sort(means.begin(), means.end());
  const double tail = (1.0 - level) / 2.0;
  return {quantile_sorted(means, tail), quantile_sorted(means, 1.0 - tail)};
}

struct GapStats {
  double mean = 0.0;
  double median = 0.0;
  double max = 0.0;
  double p95 = 0.0;
  Interval ci;
};

inline GapStats gap_stats(std::vector<double> values, std::uint64_t seed) {
  GapStats s;
  s.ci = bootstrap_mean_ci(values, seed);
  std::sort(values.begin(), values.end());
  s.mean = mean(values);
  s.median = quantile_sorted(values, 0.5);
  s.max = values.empty() ? std::nan("") : values.back();
  s.p95 = quantile_sorted(values, 0.95);
  return s;
}

// ---------------------------------------------------------------------------
// Running plans

/// All trials of one sweep point, in trial order.
inline std::vector<TrajectoryRecord> run_point(const ExperimentPlan& plan, std::size_t point) {
  const AllocationConfig base = plan.point_config(point);
  std::optional<PotentialParams> potentials;
  if (plan.record_potentials) potentials = plan.potential_params(base);
  std::vector<TrajectoryRecord> records(plan.trials);
  parallel_for(plan.trials, [&](std::size_t trial) {
    AllocationConfig c = base;
    c.seed = derive_seed(plan.base.seed, point, trial);
    records[trial] = run_trial(c, potentials);
    records[trial].trial = trial;
  });
  return records;
}

struct PointSummary {
  std::size_t point = 0;
  std::string label;
  AllocationConfig config;
  std::uint64_t trials = 0;
  GapStats max_gap;
  double median_sum_gap = 0.0;
  double median_ball_count_gap = 0.0;
  std::optional<double> median_rounds;
};

inline PointSummary summarize_point(const ExperimentPlan& plan, std::size_t point,
                                    const std::vector<TrajectoryRecord>& records) {
  PointSummary s;
  s.point = point;
  s.label = plan.point_label(point);
  s.config = plan.point_config(point);
  s.trials = records.size();
  std::vector<double> gaps, sums, balls, rounds;
  for (const auto& r : records) {
    gaps.push_back(r.final_row().max_gap);
    sums.push_back(r.final_row().sum_gap);
    balls.push_back(r.final_row().ball_count_gap);
    if (r.rounds_used) rounds.push_back(static_cast<double>(*r.rounds_used));
  }
  s.max_gap = gap_stats(gaps, derive_seed(plan.base.seed, point, 0xb0075742ULL));
  s.median_sum_gap = median(sums);
  s.median_ball_count_gap = median(balls);
  if (!rounds.empty()) s.median_rounds = median(rounds);
  return s;
}

inline nlohmann::json to_json(const PointSummary& s) {
  nlohmann::json j;
  j["point"] = s.point;
  if (!s.label.empty()) j["value"] = s.label;
  j["n"] = s.config.n;
  j["D"] = s.config.dims;
  j["m"] = s.config.m;
  j["trials"] = s.trials;
  j["final_max_gap"] = {{"mean", s.max_gap.mean},
                        {"median", s.max_gap.median},
                        {"max", s.max_gap.max},
                        {"p95", s.max_gap.p95},
                        {"mean_ci95", {s.max_gap.ci.low, s.max_gap.ci.high}}};
  j["median_final_sum_gap"] = s.median_sum_gap;
  j["median_final_ball_count_gap"] = s.median_ball_count_gap;
  if (s.median_rounds) j["median_rounds_used"] = *s.median_rounds;
  return j;
}

struct RunResult {
  std::vector<PointSummary> points;
  std::vector<std::vector<TrajectoryRecord>> records;  // [point][trial]
};

inline std::string trajectory_csv(const RunResult& result) {
  std::ostringstream out;
  out << kCsvHeader << '\n';
  for (std::size_t p = 0; p < result.records.size(); ++p)
    for (const auto& rec : result.records[p]) write_csv_rows(out, p, rec);
  return out.str();
}

inline nlohmann::json summary_json(const ExperimentPlan& plan, const RunResult& result) {
  nlohmann::json j;
  j["seed"] = plan.base.seed;
  j["trials"] = plan.trials;
  if (plan.sweep) j["sweep"] = plan.sweep->param;
  j["points"] = nlohmann::json::array();
  for (const auto& p : result.points) j["points"].push_back(to_json(p));
  return j;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw io_error("failed writing '" + path.string() + "'");
}

/// Runs every (sweep point, trial). When the plan names an output prefix,
/// writes `<prefix>.csv` and `<prefix>.summary.json`.
inline RunResult run_plan(const ExperimentPlan& plan) {
  plan.validate();
  RunResult result;
  for (std::size_t p = 0; p < plan.points(); ++p) {
    result.records.push_back(run_point(plan, p));
    result.points.push_back(summarize_point(plan, p, result.records.back()));
  }
  if (!plan.output.empty()) {
    write_text(plan.output + ".csv", trajectory_csv(result));
    write_text(plan.output + ".summary.json", summary_json(plan, result).dump(2) + "\n");
  }
  return result;
}

// ---------------------------------------------------------------------------
// Subcommands other than `run`

template <class Load>
nlohmann::json drift_at(const AllocationConfig& config, const PotentialParams& params,
                        std::uint64_t t, std::size_t samples, std::uint64_t seed) {
  const auto state = state_at<Load>(config, t);
  Engine rng(splitmix64(seed ^ 0xd1f7ULL));
  const DriftEstimate e = drift_estimate(state, config.process, config.source, params, samples, rng);
  return {{"t", t},
          {"samples", samples},
          {"alpha", params.alpha},
          {"phi", e.start.phi},
          {"psi", e.start.psi},
          {"gamma", e.start.gamma},
          {"mean_dgamma", e.mean_dgamma},
          {"ci_dgamma", e.ci_dgamma},
          {"mean_dphi", e.mean_dphi},
          {"ci_dphi", e.ci_dphi},
          {"mean_dpsi", e.mean_dpsi},
          {"ci_dpsi", e.ci_dpsi}};
}

/// Freezes trial 0 of each sweep point at ball count t and estimates the
/// one-step potential drift there.
inline nlohmann::json drift_command(const ExperimentPlan& plan, std::uint64_t t,
                                    std::size_t samples) {
  if (!plan.potential) throw config_error("drift requires potential.variant");
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t p = 0; p < plan.points(); ++p) {
    AllocationConfig c = plan.point_config(p);
    c.seed = derive_seed(plan.base.seed, p, 0);
    const PotentialParams params = plan.potential_params(c);
    nlohmann::json j = c.source.integral() ? drift_at<std::int64_t>(c, params, t, samples, c.seed)
                                           : drift_at<double>(c, params, t, samples, c.seed);
    j["point"] = p;
    j["variant"] = std::string(to_string(params.variant));
    out.push_back(std::move(j));
  }
  return out;
}

struct OracleCheckResult {
  std::size_t point = 0;
  ChiSquareResult chi;
  double expected_gap = 0.0;
  bool forbidden = false;
  std::string diagnostic;
  bool passed() const { return !forbidden && chi.p_value > 0.01; }
};

/// Exact enumeration against `trials` simulated final states, per point.
inline std::vector<OracleCheckResult> oracle_check(const ExperimentPlan& plan, std::size_t trials) {
  std::vector<OracleCheckResult> out;
  for (std::size_t p = 0; p < plan.points(); ++p) {
    const AllocationConfig base = plan.point_config(p);
    const ExactDistribution dist = enumerate_exact(base);
    std::vector<LoadKey> finals(trials);
    parallel_for(trials, [&](std::size_t k) {
      AllocationConfig c = base;
      c.seed = derive_seed(plan.base.seed, p, k);
      finals[k] = load_key(final_loads(c));
    });
    OracleCheckResult r;
    r.point = p;
    r.expected_gap = dist.expected_gap.convert_to<double>();
    try {
      r.chi = chi_square_compare(dist, std::span<const LoadKey>(finals));
    } catch (const forbidden_outcome& e) {
      r.forbidden = true;
      r.diagnostic = e.what();
    }
    out.push_back(r);
  }
  return out;
}

inline BoundInputs bound_inputs(const AllocationConfig& c) {
  BoundInputs in;
  in.n = c.n;
  in.dims = c.dims;
  in.m = c.m;
  in.f = c.source.variant == SourceVariant::weighted_scalar ? 1.0 : c.source.mean_ball_load(c.dims);
  in.beta = c.process.kind == ProcessKind::beta_choice ? c.process.beta : 1.0;
  in.mean_weight = c.source.weight ? c.source.weight->mean() : 1.0;
  return in;
}

/// Bound curves per sweep point beside the observed median gaps.
inline nlohmann::json bounds_command(const ExperimentPlan& plan, double zeta = 0.1) {
  ExperimentPlan quiet = plan;
  quiet.output.clear();
  const RunResult result = run_plan(quiet);
  nlohmann::json out = nlohmann::json::array();
  for (const auto& s : result.points) {
    const BoundCurves b = bound_curves(bound_inputs(s.config), zeta);
    nlohmann::json j = to_json(s);
    j["bounds"] = {{"zeta", b.zeta},
                   {"upper_dchoice_fixed_f", b.upper_dchoice_fixed_f},
                   {"upper_dchoice_whp", b.upper_dchoice_whp},
                   {"lower_fixed_f", b.lower_fixed_f},
                   {"upper_beta", b.upper_beta},
                   {"lower_beta", b.lower_beta},
                   {"one_choice_heavy", b.one_choice_heavy},
                   {"weighted_scalar", b.weighted_scalar}};
    out.push_back(std::move(j));
  }
  return out;
}

}  // namespace mdbins
