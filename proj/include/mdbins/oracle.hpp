#pragma once

// Exact enumeration of tiny allocation instances in rational arithmetic,
// and a chi-square goodness-of-fit test of simulated trials against it.
//
// The enumeration deliberately does not reuse the simulator's selection
// code: bin choice, tie-breaking and ball realizations are re-derived here
// from raw loads so the two paths check each other.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "mdbins/config.hpp"
#include "mdbins/core.hpp"
#include "mdbins/errors.hpp"
#include "mdbins/potentials.hpp"
#include "mdbins/processes.hpp"

namespace mdbins {

using Rational = boost::multiprecision::cpp_rational;

/// Dimension-major raw loads, L[d * n + i].
using LoadKey = std::vector<std::int64_t>;

inline LoadKey load_key(const IntLoadMatrix& state) {
  LoadKey key;
  key.reserve(state.bins() * state.dims());
  for (std::size_t d = 0; d < state.dims(); ++d)
    for (std::int64_t v : state.row(d)) key.push_back(v);
  return key;
}

struct ExactDistribution {
  std::size_t bins = 1;
  std::size_t dims = 1;
  std::map<LoadKey, Rational> outcomes;
  Rational expected_gap;

  Rational total_probability() const {
    Rational sum = 0;
    for (const auto& [key, p] : outcomes) sum += p;
    return sum;
  }

  /// Exact gap of one outcome: max_d (max_i L[d][i] - T[d]/n).
  Rational gap_of(const LoadKey& key) const {
    Rational best = 0;
    for (std::size_t d = 0; d < dims; ++d) {
      std::int64_t top = 0, total = 0;
      for (std::size_t i = 0; i < bins; ++i) {
        top = std::max(top, key[d * bins + i]);
        total += key[d * bins + i];
      }
      Rational g = Rational(top) - Rational(total, static_cast<std::int64_t>(bins));
      if (g > best) best = g;
    }
    return best;
  }

  /// Expected potential of the final state.
  double expected_gamma(const PotentialParams& params) const {
    long double acc = 0.0L;
    for (const auto& [key, p] : outcomes) {
      std::vector<double> s(bins, 0.0);
      for (std::size_t d = 0; d < dims; ++d) {
        std::int64_t total = 0;
        for (std::size_t i = 0; i < bins; ++i) total += key[d * bins + i];
        for (std::size_t i = 0; i < bins; ++i)
          s[i] += static_cast<double>(static_cast<std::int64_t>(bins) * key[d * bins + i] - total) /
                  static_cast<double>(bins);
      }
      std::sort(s.begin(), s.end(), std::greater<>());
      acc += static_cast<long double>(potential(s, params).gamma) *
             static_cast<long double>(p.convert_to<double>());
    }
    return static_cast<double>(acc);
  }
};

namespace oracle_detail {

inline Rational exact(double v) { return Rational(v); }

inline std::int64_t binomial(std::size_t n, std::size_t k) {
  std::int64_t r = 1;
  for (std::size_t j = 1; j <= k; ++j) r = r * static_cast<std::int64_t>(n - k + j) / static_cast<std::int64_t>(j);
  return r;
}

using Subset = std::vector<std::uint32_t>;

inline void all_subsets(std::size_t dims, std::size_t f, std::size_t from, Subset& cur,
                        std::vector<Subset>& out) {
  if (cur.size() == f) {
    out.push_back(cur);
    return;
  }
  for (std::size_t d = from; d < dims; ++d) {
    cur.push_back(static_cast<std::uint32_t>(d));
    all_subsets(dims, f, d + 1, cur, out);
    cur.pop_back();
  }
}

// Successive weighted picks without replacement; sums ordered draws into
// their unordered subset.
inline void weighted_subsets(const std::vector<Rational>& w, std::size_t f, Subset& picked,
                             const Rational& prob, std::map<Subset, Rational>& out) {
  if (picked.size() == f) {
    Subset key = picked;
    std::sort(key.begin(), key.end());
    out[key] += prob;
    return;
  }
  Rational remaining = 0;
  for (std::size_t d = 0; d < w.size(); ++d)
    if (std::find(picked.begin(), picked.end(), d) == picked.end()) remaining += w[d];
  for (std::size_t d = 0; d < w.size(); ++d) {
    if (w[d] == 0 || std::find(picked.begin(), picked.end(), d) != picked.end()) continue;
    picked.push_back(static_cast<std::uint32_t>(d));
    weighted_subsets(w, f, picked, prob * w[d] / remaining, out);
    picked.pop_back();
  }
}

inline std::map<Subset, Rational> ball_law(const BallSourceSpec& source, std::size_t dims) {
  std::map<Subset, Rational> law;
  if (source.variant == SourceVariant::fixed_f_uniform) {
    std::vector<Subset> subsets;
    Subset cur;
    all_subsets(dims, *source.f, 0, cur, subsets);
    const Rational p(1, binomial(dims, *source.f));
    for (auto& s : subsets) law[s] = p;
  } else {
    std::vector<Rational> w;
    for (double x : source.dim_weights) w.push_back(exact(x));
    Subset picked;
    weighted_subsets(w, *source.f, picked, Rational(1), law);
  }
  return law;
}

using Placement = std::vector<std::size_t>;  // bins receiving a copy

// Sum of raw loads per bin; ordering by it is ordering by s.
inline std::vector<std::int64_t> bin_totals(const LoadKey& key, std::size_t bins, std::size_t dims) {
  std::vector<std::int64_t> t(bins, 0);
  for (std::size_t d = 0; d < dims; ++d)
    for (std::size_t i = 0; i < bins; ++i) t[i] += key[d * bins + i];
  return t;
}

// Every ordered tuple of `d` bins, each with probability n^-d.
inline void for_each_tuple(std::size_t bins, std::size_t d,
                           const std::function<void(const std::vector<std::size_t>&)>& fn) {
  std::vector<std::size_t> tuple(d, 0);
  while (true) {
    fn(tuple);
    std::size_t k = 0;
    while (k < d && ++tuple[k] == bins) tuple[k++] = 0;
    if (k == d) return;
  }
}

inline std::map<Placement, Rational> placement_law(const LoadKey& key, std::size_t bins,
                                                   std::size_t dims, const ProcessSpec& spec) {
  const auto totals = bin_totals(key, bins, dims);
  std::map<Placement, Rational> law;
  auto tuples = [&](std::size_t d, const Rational& weight, bool ties) {
    Rational each = weight;
    for (std::size_t k = 0; k < d; ++k) each /= static_cast<std::int64_t>(bins);
    for_each_tuple(bins, d, [&](const std::vector<std::size_t>& tuple) {
      std::int64_t low = totals[tuple[0]];
      for (std::size_t b : tuple) low = std::min(low, totals[b]);
      Placement winners;
      for (std::size_t b : tuple)
        if (totals[b] == low) winners.push_back(b);
      std::sort(winners.begin(), winners.end());
      winners.erase(std::unique(winners.begin(), winners.end()), winners.end());
      if (!ties) winners.resize(1);  // lowest index among the minimal
      law[winners] += each;
    });
  };
  switch (spec.kind) {
    case ProcessKind::one_choice: tuples(1, Rational(1), false); break;
    case ProcessKind::d_choice: tuples(spec.d, Rational(1), false); break;
    case ProcessKind::greedy_with_ties: tuples(spec.d, Rational(1), true); break;
    case ProcessKind::beta_choice: {
      const Rational beta = exact(spec.beta);
      if (beta != 0) tuples(2, beta, false);
      if (beta != 1) tuples(1, Rational(1) - beta, false);
      break;
    }
    case ProcessKind::parallel_rounds:
      throw config_error("exact enumeration does not cover parallel-rounds");
  }
  return law;
}

}  // namespace oracle_detail

inline constexpr double kOracleSearchLimit = 1e7;

/// Enumerates every (ball realization, bin sample) branch of `config.m`
/// steps from `initial` (empty when not given) and aggregates final states.
inline ExactDistribution enumerate_exact(const AllocationConfig& config,
                                         const std::optional<IntLoadMatrix>& initial = std::nullopt) {
  config.validate();
  if (!config.source.is_fixed_f())
    throw config_error("exact enumeration covers fixed-f sources only");
  if (config.process.kind == ProcessKind::parallel_rounds)
    throw config_error("exact enumeration does not cover parallel-rounds");
  const std::size_t n = config.n, D = config.dims;
  const auto law = oracle_detail::ball_law(config.source, D);
  const std::size_t d = config.process.kind == ProcessKind::one_choice ? 1
                        : config.process.kind == ProcessKind::beta_choice ? 2
                                                                          : config.process.d;
  const double space = std::pow(static_cast<double>(law.size()), static_cast<double>(config.m)) *
                       std::pow(static_cast<double>(n), static_cast<double>(d * config.m));
  if (space > kOracleSearchLimit)
    throw config_error("search space " + std::to_string(space) + " exceeds " +
                       std::to_string(kOracleSearchLimit));

  LoadKey start(n * D, 0);
  if (initial) {
    if (initial->bins() != n || initial->dims() != D)
      throw config_error("initial state shape does not match the config");
    start = load_key(*initial);
  }
  std::map<LoadKey, Rational> layer{{start, Rational(1)}};
  for (std::uint64_t step = 0; step < config.m; ++step) {
    std::map<LoadKey, Rational> next;
    for (const auto& [key, p_state] : layer) {
      const auto placements = oracle_detail::placement_law(key, n, D, config.process);
      for (const auto& [dims, p_ball] : law)
        for (const auto& [bins, p_place] : placements) {
          LoadKey after = key;
          for (std::size_t b : bins)
            for (std::uint32_t dim : dims) ++after[dim * n + b];
          next[after] += p_state * p_ball * p_place;
        }
    }
    layer.swap(next);
  }

  ExactDistribution dist;
  dist.bins = n;
  dist.dims = D;
  dist.outcomes = std::move(layer);
  dist.expected_gap = 0;
  for (const auto& [key, p] : dist.outcomes) dist.expected_gap += p * dist.gap_of(key);
  return dist;
}

struct ChiSquareResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t dof = 0;
  std::size_t cells = 0;  // after pooling
};

/// Pearson goodness of fit. Cells expecting fewer than 5 observations are
/// pooled; a zero-probability observation throws forbidden_outcome.
inline ChiSquareResult chi_square_compare(const ExactDistribution& dist,
                                          std::span<const LoadKey> trials) {
  if (trials.empty()) throw config_error("chi_square_compare needs at least one trial");
  std::map<LoadKey, std::uint64_t> observed;
  for (const auto& key : trials) {
    auto it = dist.outcomes.find(key);
    if (it == dist.outcomes.end() || it->second == 0)
      throw forbidden_outcome("simulated outcome has probability zero under the exact distribution");
    ++observed[key];
  }
  const auto total = static_cast<double>(trials.size());
  struct Cell {
    double expected;
    double observed;
  };
  std::vector<Cell> cells;
  for (const auto& [key, p] : dist.outcomes) {
    auto it = observed.find(key);
    cells.push_back({total * p.convert_to<double>(),
                     it == observed.end() ? 0.0 : static_cast<double>(it->second)});
  }
  std::sort(cells.begin(), cells.end(),
            [](const Cell& a, const Cell& b) { return a.expected < b.expected; });
  std::vector<Cell> pooled;
  Cell pool{0.0, 0.0};
  std::size_t k = 0;
  for (; k < cells.size() && cells[k].expected < 5.0; ++k) {
    pool.expected += cells[k].expected;
    pool.observed += cells[k].observed;
  }
  for (; k < cells.size(); ++k) {
    if (pool.expected > 0.0 && pool.expected < 5.0) {
      pool.expected += cells[k].expected;
      pool.observed += cells[k].observed;
      continue;
    }
    pooled.push_back(cells[k]);
  }
  if (pool.expected > 0.0) pooled.push_back(pool);

  ChiSquareResult r;
  r.cells = pooled.size();
  if (pooled.size() < 2) return r;
  for (const auto& c : pooled) {
    const double diff = c.observed - c.expected;
    r.statistic += diff * diff / c.expected;
  }
  r.dof = pooled.size() - 1;
  r.p_value = boost::math::gamma_q(static_cast<double>(r.dof) / 2.0, r.statistic / 2.0);
  return r;
}

inline ChiSquareResult chi_square_compare(const ExactDistribution& dist,
                                          std::span<const IntLoadMatrix> trials) {
  std::vector<LoadKey> keys;
  keys.reserve(trials.size());
  for (const auto& t : trials) keys.push_back(load_key(t));
  return chi_square_compare(dist, std::span<const LoadKey>(keys));
}

}  // namespace mdbins
