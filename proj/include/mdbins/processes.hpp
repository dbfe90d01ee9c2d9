#pragma once

// Allocation rules: closed-form rank probabilities and per-ball bin
// selection. Full-trajectory runners live in runners.hpp.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mdbins/core.hpp"
#include "mdbins/errors.hpp"
#include "mdbins/random.hpp"

namespace mdbins {

enum class ProcessKind { one_choice, d_choice, beta_choice, greedy_with_ties, parallel_rounds };

inline std::string_view to_string(ProcessKind k) {
  switch (k) {
    case ProcessKind::one_choice: return "one-choice";
    case ProcessKind::d_choice: return "d-choice";
    case ProcessKind::beta_choice: return "beta-choice";
    case ProcessKind::greedy_with_ties: return "greedy-with-ties";
    case ProcessKind::parallel_rounds: return "parallel-rounds";
  }
  return "?";
}

inline std::optional<ProcessKind> parse_process_kind(std::string_view s) {
  for (auto k : {ProcessKind::one_choice, ProcessKind::d_choice, ProcessKind::beta_choice,
                 ProcessKind::greedy_with_ties, ProcessKind::parallel_rounds})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

struct ProcessSpec {
  ProcessKind kind = ProcessKind::d_choice;
  std::size_t d = 2;   // multi-choice kinds
  double beta = 1.0;   // beta-choice

  static ProcessSpec one_choice() { return {ProcessKind::one_choice, 1, 1.0}; }
  static ProcessSpec d_choice(std::size_t d) { return {ProcessKind::d_choice, d, 1.0}; }
  static ProcessSpec beta_choice(double beta) { return {ProcessKind::beta_choice, 2, beta}; }
  static ProcessSpec greedy_with_ties(std::size_t d) {
    return {ProcessKind::greedy_with_ties, d, 1.0};
  }
  static ProcessSpec parallel_rounds(std::size_t d) {
    return {ProcessKind::parallel_rounds, d, 1.0};
  }

  bool multi_choice() const {
    return kind == ProcessKind::d_choice || kind == ProcessKind::greedy_with_ties ||
           kind == ProcessKind::parallel_rounds;
  }

  void validate(std::size_t n) const {
    if (multi_choice() && (d < 2 || d > n))
      throw config_error(std::string(to_string(kind)) + " requires 2 <= d <= n");
    if (kind == ProcessKind::beta_choice && !(beta > 0.0 && beta <= 1.0))
      throw config_error("beta-choice requires beta in (0, 1]");
  }
};

/// Probability that a ball lands in the rank-i bin (rank 1 = most loaded),
/// assuming all sum loads are distinct. Entry k is rank k+1.
inline std::vector<double> probability_vector(const ProcessSpec& spec, std::size_t n) {
  if (n == 0) throw config_error("probability_vector requires n >= 1");
  std::vector<double> p(n);
  const auto nn = static_cast<double>(n);
  switch (spec.kind) {
    case ProcessKind::one_choice:
      std::fill(p.begin(), p.end(), 1.0 / nn);
      break;
    case ProcessKind::d_choice:
    case ProcessKind::greedy_with_ties:
    case ProcessKind::parallel_rounds: {
      const auto d = static_cast<double>(spec.d);
      double prev = 0.0;
      for (std::size_t i = 1; i <= n; ++i) {
        const double cur = std::pow(static_cast<double>(i) / nn, d);
        p[i - 1] = cur - prev;
        prev = cur;
      }
      break;
    }
    case ProcessKind::beta_choice:
      for (std::size_t i = 1; i <= n; ++i)
        p[i - 1] = (1.0 - spec.beta) / nn +
                   spec.beta * (2.0 * static_cast<double>(i) - 1.0) / (nn * nn);
      break;
  }
  return p;
}

namespace detail {

// d uniform samples with replacement; the one with the smallest key wins,
// ties going to the lowest bin index.
template <class Key>
std::size_t least_of_samples(std::span<const Key> keys, std::size_t d, Engine& rng) {
  std::size_t best = uniform_index(rng, keys.size());
  for (std::size_t k = 1; k < d; ++k) {
    const std::size_t c = uniform_index(rng, keys.size());
    if (keys[c] < keys[best] || (keys[c] == keys[best] && c < best)) best = c;
  }
  return best;
}

}  // namespace detail

/// Picks the receiving bin given per-bin keys ordered like s (smaller key =
/// less loaded). Greedy-with-ties and parallel kinds select like d-choice.
template <class Key>
std::size_t select_bin(std::span<const Key> keys, const ProcessSpec& spec, Engine& rng) {
  switch (spec.kind) {
    case ProcessKind::one_choice: return uniform_index(rng, keys.size());
    case ProcessKind::beta_choice:
      return bernoulli(rng, spec.beta) ? detail::least_of_samples(keys, 2, rng)
                                       : uniform_index(rng, keys.size());
    case ProcessKind::d_choice:
    case ProcessKind::greedy_with_ties:
    case ProcessKind::parallel_rounds: return detail::least_of_samples(keys, spec.d, rng);
  }
  return 0;
}

template <class Load>
std::size_t select_bin(const NormalizedState<Load>& state, const ProcessSpec& spec, Engine& rng) {
  return select_bin<Load>(state.scaled_s, spec, rng);
}

template <class Load>
std::size_t select_bin(const BasicLoadMatrix<Load>& state, const ProcessSpec& spec, Engine& rng) {
  return select_bin<Load>(state.bin_sums(), spec, rng);
}

/// Greedy with ties: sample d bins with replacement and return every
/// distinct sampled bin whose key equals the minimum, ascending.
template <class Key>
void select_tied_bins(std::span<const Key> keys, std::size_t d, Engine& rng,
                      std::vector<std::size_t>& out) {
  out.clear();
  for (std::size_t k = 0; k < d; ++k) {
    const std::size_t c = uniform_index(rng, keys.size());
    if (out.empty() || keys[c] < keys[out.front()]) {
      out.assign(1, c);
    } else if (keys[c] == keys[out.front()] &&
               std::find(out.begin(), out.end(), c) == out.end()) {
      out.push_back(c);
    }
  }
  std::sort(out.begin(), out.end());
}

/// Places one ball according to `spec`, returning the number of copies.
/// A lone parallel-rounds ball is accepted by all its bins and takes the
/// least loaded, so a single step is a d-choice step.
template <class Load>
std::size_t place_ball(BasicLoadMatrix<Load>& state, const ProcessSpec& spec,
                       const BallSpec& ball, Engine& rng, std::vector<std::size_t>& scratch) {
  if (spec.kind == ProcessKind::greedy_with_ties) {
    select_tied_bins<Load>(state.bin_sums(), spec.d, rng, scratch);
    state.apply_copies(scratch, ball);
    return scratch.size();
  }
  state.apply_ball(select_bin(state, spec, rng), ball);
  return 1;
}

}  // namespace mdbins
