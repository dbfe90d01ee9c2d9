#pragma once

// Whole-trial runners: sequential placement, greedy with ties, and the
// multi-round parallel protocol. Each trial is a strictly sequential
// Markov chain driven by one engine seeded from AllocationConfig::seed.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mdbins/config.hpp"
#include "mdbins/core.hpp"
#include "mdbins/metrics.hpp"
#include "mdbins/potentials.hpp"
#include "mdbins/processes.hpp"
#include "mdbins/random.hpp"
#include "mdbins/trajectory.hpp"

namespace mdbins {

template <class Load>
struct TrialOutcome {
  TrajectoryRecord record;
  BasicLoadMatrix<Load> state;
};

namespace detail {

template <class Load>
class CheckpointRecorder {
 public:
  CheckpointRecorder(const AllocationConfig& config, const std::optional<PotentialParams>& potentials,
                     TrajectoryRecord& record)
      : checkpoints_(config.effective_checkpoints()), potentials_(potentials), record_(record) {}

  /// Records every checkpoint equal to the state's ball count.
  void observe(const BasicLoadMatrix<Load>& state, std::optional<std::uint64_t> rounds = {}) {
    while (next_ < checkpoints_.size() && checkpoints_[next_] == state.balls_placed()) {
      record_.rows.push_back(row(state, rounds));
      ++next_;
    }
  }

 private:
  CheckpointRow row(const BasicLoadMatrix<Load>& state, std::optional<std::uint64_t> rounds) const {
    const GapReport gaps = gap_report(state);
    CheckpointRow r;
    r.t = state.balls_placed();
    r.max_gap = gaps.max_gap;
    r.sum_gap = gaps.sum_gap;
    r.ball_count_gap = gaps.ball_count_gap;
    r.rounds_used = rounds;
    if (potentials_) {
      try {
        const PotentialValue v = gamma(state, *potentials_);
        r.phi = v.phi;
        r.psi = v.psi;
        r.gamma = v.gamma;
      } catch (const potential_overflow&) {
        // Divergence is recorded, not fatal.
        r.phi = r.psi = r.gamma = std::numeric_limits<double>::infinity();
      }
    }
    return r;
  }

  std::vector<std::uint64_t> checkpoints_;
  std::size_t next_ = 0;
  const std::optional<PotentialParams>& potentials_;
  TrajectoryRecord& record_;
};

inline std::uint64_t round_limit(const AllocationConfig& config) {
  const double n = static_cast<double>(config.n);
  const double loglog = config.n >= 4 ? std::log2(std::log2(n)) : 0.0;
  const double form = static_cast<double>(config.m) / n + loglog +
                      static_cast<double>(config.process.d) + 2.0;
  return static_cast<std::uint64_t>(std::ceil(64.0 * form));
}

// Sequential kinds and greedy with ties: one ball per step.
template <class Load>
TrialOutcome<Load> simulate_stepwise(const AllocationConfig& config,
                                     const std::optional<PotentialParams>& potentials) {
  TrialOutcome<Load> out{{}, BasicLoadMatrix<Load>(config.n, config.dims)};
  out.record.seed = config.seed;
  CheckpointRecorder<Load> recorder(config, potentials, out.record);
  Engine rng(config.seed);
  BallGenerator gen(config.source, config.dims);
  BallSpec ball;
  std::vector<std::size_t> scratch;
  recorder.observe(out.state);
  for (std::uint64_t b = 0; b < config.m; ++b) {
    gen.next(rng, ball);
    place_ball(out.state, config.process, ball, rng, scratch);
    recorder.observe(out.state);
  }
  return out;
}

template <class Load>
TrialOutcome<Load> simulate_parallel(const AllocationConfig& config,
                                     const std::optional<PotentialParams>& potentials) {
  TrialOutcome<Load> out{{}, BasicLoadMatrix<Load>(config.n, config.dims)};
  out.record.seed = config.seed;
  CheckpointRecorder<Load> recorder(config, potentials, out.record);
  Engine rng(config.seed);
  BallGenerator gen(config.source, config.dims);
  const std::size_t d = config.process.d;

  // Every ball draws its realization and its d bins up front and keeps
  // them across rounds.
  std::vector<BallSpec> balls(config.m);
  std::vector<std::size_t> choices(config.m * d);
  for (std::uint64_t b = 0; b < config.m; ++b) {
    gen.next(rng, balls[b]);
    for (std::size_t k = 0; k < d; ++k) choices[b * d + k] = uniform_index(rng, config.n);
  }

  std::vector<std::uint64_t> pending(config.m);
  for (std::uint64_t b = 0; b < config.m; ++b) pending[b] = b;
  std::vector<std::uint64_t> accepted(config.n);
  std::vector<std::uint64_t> stamp(config.n, 0);
  const std::uint64_t limit = round_limit(config);
  std::uint64_t rounds = 0;
  recorder.observe(out.state, rounds);
  while (!pending.empty()) {
    if (++rounds > limit)
      throw std::runtime_error("parallel protocol exceeded " + std::to_string(limit) +
                               " rounds with " + std::to_string(pending.size()) +
                               " balls uncommitted");
    // Each bin accepts the lowest-ID bidder of this round.
    for (std::uint64_t b : pending)
      for (std::size_t k = 0; k < d; ++k) {
        const std::size_t bin = choices[b * d + k];
        if (stamp[bin] != rounds) {
          stamp[bin] = rounds;
          accepted[bin] = b;
        }
      }
    // A ball accepted anywhere commits to its least loaded accepting bin.
    // Accepting bins are exclusive to one ball per round, so commit order
    // within the round does not affect any choice.
    std::vector<std::uint64_t> still;
    still.reserve(pending.size());
    auto sums = out.state.bin_sums();
    for (std::uint64_t b : pending) {
      std::size_t best = config.n;
      for (std::size_t k = 0; k < d; ++k) {
        const std::size_t bin = choices[b * d + k];
        if (accepted[bin] != b) continue;
        if (best == config.n || sums[bin] < sums[best] || (sums[bin] == sums[best] && bin < best))
          best = bin;
      }
      if (best == config.n) {
        still.push_back(b);
        continue;
      }
      out.state.apply_ball(best, balls[b]);
      recorder.observe(out.state, rounds);
    }
    pending.swap(still);
  }
  out.record.rounds_used = rounds;
  return out;
}

template <class Load>
TrialOutcome<Load> simulate(const AllocationConfig& config,
                            const std::optional<PotentialParams>& potentials) {
  if (config.process.kind == ProcessKind::parallel_rounds)
    return simulate_parallel<Load>(config, potentials);
  return simulate_stepwise<Load>(config, potentials);
}

inline void require_kind(const AllocationConfig& config, std::initializer_list<ProcessKind> kinds,
                         const char* runner) {
  if (std::find(kinds.begin(), kinds.end(), config.process.kind) == kinds.end())
    throw config_error(std::string(runner) + " does not run " +
                       std::string(to_string(config.process.kind)));
}

inline TrajectoryRecord run_any(const AllocationConfig& config,
                                const std::optional<PotentialParams>& potentials) {
  config.validate();
  if (config.source.integral()) return simulate<std::int64_t>(config, potentials).record;
  return simulate<double>(config, potentials).record;
}

}  // namespace detail

/// One-choice, d-choice or (1+beta)-choice trial.
inline TrajectoryRecord run_sequential(const AllocationConfig& config,
                                       const std::optional<PotentialParams>& potentials = {}) {
  detail::require_kind(config, {ProcessKind::one_choice, ProcessKind::d_choice,
                                ProcessKind::beta_choice}, "run_sequential");
  return detail::run_any(config, potentials);
}

/// Every sampled bin tied at the minimum sum load gets a copy of the ball.
inline TrajectoryRecord run_greedy_with_ties(const AllocationConfig& config,
                                             const std::optional<PotentialParams>& potentials = {}) {
  detail::require_kind(config, {ProcessKind::greedy_with_ties}, "run_greedy_with_ties");
  return detail::run_any(config, potentials);
}

/// Multi-round parallel protocol; the record carries rounds_used.
inline TrajectoryRecord run_parallel_rounds(const AllocationConfig& config,
                                            const std::optional<PotentialParams>& potentials = {}) {
  detail::require_kind(config, {ProcessKind::parallel_rounds}, "run_parallel_rounds");
  return detail::run_any(config, potentials);
}

/// Dispatches on the configured process kind.
inline TrajectoryRecord run_trial(const AllocationConfig& config,
                                  const std::optional<PotentialParams>& potentials = {}) {
  return detail::run_any(config, potentials);
}

/// Runs a trial and returns its final state. Integer-load sources only.
inline IntLoadMatrix final_loads(const AllocationConfig& config) {
  config.validate();
  if (!config.source.integral()) throw config_error("final_loads requires an integer-load source");
  AllocationConfig quiet = config;
  quiet.checkpoints = {config.m};
  return detail::simulate<std::int64_t>(quiet, std::nullopt).state;
}

/// Runs the first `t` balls of a trial and returns the frozen state.
template <class Load>
BasicLoadMatrix<Load> state_at(const AllocationConfig& config, std::uint64_t t) {
  AllocationConfig prefix = config;
  prefix.m = t;
  prefix.checkpoints = {t};
  prefix.validate();
  return detail::simulate<Load>(prefix, std::nullopt).state;
}

}  // namespace mdbins
