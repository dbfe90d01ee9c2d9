#pragma once

// Allocation state for multidimensional balls into bins.
//
// Loads are stored raw: L[d][i] is the cumulative load of dimension d in
// bin i and T[d] the dimension total. The normalized quantities
//   x[d][i] = L[d][i] - T[d]/n,   s_i = sum_d x[d][i]
// are derived on demand. For integer loads n*x and n*s are exact integers,
// which keeps the per-dimension zero-sum invariant exact over long runs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mdbins/errors.hpp"
#include "mdbins/random.hpp"

namespace mdbins {

// ---------------------------------------------------------------------------
// Ball sources

enum class SourceVariant {
  fixed_f_uniform,
  fixed_f_nonuniform,
  variable_f_binomial,
  weighted_scalar,
};

inline std::string_view to_string(SourceVariant v) {
  switch (v) {
    case SourceVariant::fixed_f_uniform: return "fixed-f-uniform";
    case SourceVariant::fixed_f_nonuniform: return "fixed-f-nonuniform";
    case SourceVariant::variable_f_binomial: return "variable-f-binomial";
    case SourceVariant::weighted_scalar: return "weighted-scalar";
  }
  return "?";
}

inline std::optional<SourceVariant> parse_source_variant(std::string_view s) {
  for (auto v : {SourceVariant::fixed_f_uniform, SourceVariant::fixed_f_nonuniform,
                 SourceVariant::variable_f_binomial, SourceVariant::weighted_scalar})
    if (to_string(v) == s) return v;
  return std::nullopt;
}

/// Scalar ball weight law for the weighted-scalar source.
struct WeightDistribution {
  enum class Kind { constant, uniform, exponential };
  Kind kind = Kind::constant;
  double a = 1.0;  // constant value | lower bound | rate
  double b = 1.0;  // upper bound (uniform only)

  static WeightDistribution constant(double w) { return {Kind::constant, w, w}; }
  static WeightDistribution uniform(double lo, double hi) { return {Kind::uniform, lo, hi}; }
  static WeightDistribution exponential(double rate) { return {Kind::exponential, rate, rate}; }

  double mean() const {
    switch (kind) {
      case Kind::constant: return a;
      case Kind::uniform: return 0.5 * (a + b);
      case Kind::exponential: return 1.0 / a;
    }
    return a;
  }

  void validate() const {
    switch (kind) {
      case Kind::constant:
        if (!(a > 0.0) || !std::isfinite(a)) throw config_error("constant weight must be > 0");
        break;
      case Kind::uniform:
        if (!(a > 0.0) || !(b >= a) || !std::isfinite(b))
          throw config_error("uniform weight needs 0 < a <= b");
        break;
      case Kind::exponential:
        if (!(a > 0.0) || !std::isfinite(a)) throw config_error("exponential rate must be > 0");
        break;
    }
  }

  double draw(Engine& rng) const {
    switch (kind) {
      case Kind::constant: return a;
      case Kind::uniform: return a + (b - a) * uniform01(rng);
      case Kind::exponential: {
        // Zero-weight draws are possible only when uniform01 returns 0.
        double w = mdbins::exponential(rng, a);
        return w > 0.0 ? w : std::numeric_limits<double>::min();
      }
    }
    return a;
  }
};

/// Which balls arrive. Exactly the fields of `variant` are set.
struct BallSourceSpec {
  SourceVariant variant = SourceVariant::fixed_f_uniform;
  std::optional<std::size_t> f;           // fixed-f variants
  std::vector<double> dim_weights;        // fixed-f-nonuniform
  std::optional<double> q;                // variable-f-binomial
  std::optional<WeightDistribution> weight;  // weighted-scalar

  static BallSourceSpec fixed_uniform(std::size_t f) {
    BallSourceSpec s;
    s.variant = SourceVariant::fixed_f_uniform;
    s.f = f;
    return s;
  }
  static BallSourceSpec fixed_nonuniform(std::size_t f, std::vector<double> w) {
    BallSourceSpec s;
    s.variant = SourceVariant::fixed_f_nonuniform;
    s.f = f;
    s.dim_weights = std::move(w);
    return s;
  }
  static BallSourceSpec binomial(double q) {
    BallSourceSpec s;
    s.variant = SourceVariant::variable_f_binomial;
    s.q = q;
    return s;
  }
  static BallSourceSpec weighted(WeightDistribution w) {
    BallSourceSpec s;
    s.variant = SourceVariant::weighted_scalar;
    s.weight = w;
    return s;
  }

  bool is_fixed_f() const {
    return variant == SourceVariant::fixed_f_uniform ||
           variant == SourceVariant::fixed_f_nonuniform;
  }
  /// Loads are integers for every variant except weighted-scalar.
  bool integral() const { return variant != SourceVariant::weighted_scalar; }

  /// Expected total load per ball: f, D*q, or E[W].
  double mean_ball_load(std::size_t dims) const {
    switch (variant) {
      case SourceVariant::fixed_f_uniform:
      case SourceVariant::fixed_f_nonuniform: return static_cast<double>(f.value_or(0));
      case SourceVariant::variable_f_binomial: return static_cast<double>(dims) * q.value_or(0.0);
      case SourceVariant::weighted_scalar: return weight ? weight->mean() : 0.0;
    }
    return 0.0;
  }

  void validate(std::size_t dims) const {
    const bool want_f = is_fixed_f();
    const bool want_w = variant == SourceVariant::fixed_f_nonuniform;
    const bool want_q = variant == SourceVariant::variable_f_binomial;
    const bool want_wd = variant == SourceVariant::weighted_scalar;
    const std::string name{to_string(variant)};
    if (f.has_value() != want_f)
      throw config_error(want_f ? name + " requires source.f" : "source.f is not used by " + name);
    if (!dim_weights.empty() != want_w)
      throw config_error(want_w ? name + " requires source.dim_weights"
                                : "source.dim_weights is not used by " + name);
    if (q.has_value() != want_q)
      throw config_error(want_q ? name + " requires source.q" : "source.q is not used by " + name);
    if (weight.has_value() != want_wd)
      throw config_error(want_wd ? name + " requires source.weight"
                                 : "source.weight is not used by " + name);
    if (want_f && (*f < 1 || *f > dims))
      throw config_error("source.f must satisfy 1 <= f <= D");
    if (want_w) {
      if (dim_weights.size() != dims)
        throw config_error("source.dim_weights must have D entries");
      double sum = 0.0;
      std::size_t positive = 0;
      for (double w : dim_weights) {
        if (!(w >= 0.0)) throw config_error("source.dim_weights entries must be >= 0");
        sum += w;
        if (w > 0.0) ++positive;
      }
      if (std::abs(sum - 1.0) > 1e-12) throw config_error("source.dim_weights must sum to 1");
      if (positive < *f)
        throw config_error("source.dim_weights needs at least f positive entries");
    }
    if (want_q && !(*q > 0.0 && *q <= 1.0)) throw config_error("source.q must lie in (0, 1]");
    if (want_wd) {
      if (dims != 1) throw config_error("weighted-scalar requires D = 1");
      weight->validate();
    }
  }
};

/// One ball: its populated dimensions (strictly increasing) and the load
/// each of them receives.
struct BallSpec {
  std::vector<std::uint32_t> dims;
  double weight = 1.0;

  double total_load() const { return weight * static_cast<double>(dims.size()); }
};

/// Draws balls from a source, reusing scratch storage across draws.
class BallGenerator {
 public:
  BallGenerator(BallSourceSpec source, std::size_t dims)
      : source_(std::move(source)), dims_(dims), scratch_(dims) {}

  const BallSourceSpec& source() const { return source_; }

  void next(Engine& rng, BallSpec& ball) {
    ball.dims.clear();
    ball.weight = 1.0;
    switch (source_.variant) {
      case SourceVariant::fixed_f_uniform: draw_uniform_subset(rng, ball); break;
      case SourceVariant::fixed_f_nonuniform: draw_weighted_subset(rng, ball); break;
      case SourceVariant::variable_f_binomial:
        for (std::size_t d = 0; d < dims_; ++d)
          if (bernoulli(rng, *source_.q)) ball.dims.push_back(static_cast<std::uint32_t>(d));
        break;
      case SourceVariant::weighted_scalar:
        ball.dims.push_back(0);
        ball.weight = source_.weight->draw(rng);
        break;
    }
  }

 private:
  // Partial Fisher-Yates over [0, D).
  void draw_uniform_subset(Engine& rng, BallSpec& ball) {
    const std::size_t f = *source_.f;
    std::iota(scratch_.begin(), scratch_.end(), 0u);
    if (f < dims_) {
      for (std::size_t k = 0; k < f; ++k) {
        const std::size_t j = k + uniform_index(rng, dims_ - k);
        std::swap(scratch_[k], scratch_[j]);
      }
    }
    ball.dims.assign(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(f));
    std::sort(ball.dims.begin(), ball.dims.end());
  }

  // Successive weighted draws without replacement.
  void draw_weighted_subset(Engine& rng, BallSpec& ball) {
    const std::size_t f = *source_.f;
    remaining_.assign(source_.dim_weights.begin(), source_.dim_weights.end());
    for (std::size_t k = 0; k < f; ++k) {
      double total = 0.0;
      for (double w : remaining_) total += w;
      const double u = uniform01(rng) * total;
      std::size_t pick = dims_;
      double acc = 0.0;
      for (std::size_t d = 0; d < dims_; ++d) {
        if (remaining_[d] <= 0.0) continue;
        acc += remaining_[d];
        pick = d;
        if (u < acc) break;
      }
      remaining_[pick] = 0.0;
      ball.dims.push_back(static_cast<std::uint32_t>(pick));
    }
    std::sort(ball.dims.begin(), ball.dims.end());
  }

  BallSourceSpec source_;
  std::size_t dims_;
  std::vector<std::uint32_t> scratch_;
  std::vector<double> remaining_;
};

inline BallSpec generate_ball(const BallSourceSpec& source, std::size_t dims, Engine& rng) {
  BallGenerator gen(source, dims);
  BallSpec ball;
  gen.next(rng, ball);
  return ball;
}

// ---------------------------------------------------------------------------
// Load matrix

template <class Load>
class BasicLoadMatrix {
 public:
  using load_type = Load;

  BasicLoadMatrix(std::size_t bins, std::size_t dims)
      : bins_(bins), dims_(dims), loads_(bins * dims, Load{}), totals_(dims, Load{}),
        bin_sums_(bins, Load{}), balls_(bins, 0) {}

  /// Builds a state from explicit per-dimension rows. Ball counts start at
  /// zero and t at zero.
  static BasicLoadMatrix from_rows(const std::vector<std::vector<Load>>& rows) {
    if (rows.empty() || rows.front().empty()) throw config_error("empty load matrix");
    BasicLoadMatrix m(rows.front().size(), rows.size());
    for (std::size_t d = 0; d < rows.size(); ++d) {
      if (rows[d].size() != m.bins_) throw config_error("ragged load matrix");
      for (std::size_t i = 0; i < m.bins_; ++i) {
        if (rows[d][i] < Load{}) throw config_error("negative load");
        m.loads_[d * m.bins_ + i] = rows[d][i];
        m.totals_[d] += rows[d][i];
        m.bin_sums_[i] += rows[d][i];
      }
    }
    return m;
  }

  std::size_t bins() const { return bins_; }
  std::size_t dims() const { return dims_; }

  Load load(std::size_t d, std::size_t i) const { return loads_[d * bins_ + i]; }
  std::span<const Load> row(std::size_t d) const {
    return {loads_.data() + d * bins_, bins_};
  }
  std::span<const Load> totals() const { return totals_; }
  Load total(std::size_t d) const { return totals_[d]; }
  /// Sum of all dimension totals.
  Load grand_total() const {
    return std::accumulate(totals_.begin(), totals_.end(), Load{});
  }
  /// Sum of raw loads over dimensions for each bin. Ordering bins by this
  /// is ordering them by s.
  std::span<const Load> bin_sums() const { return bin_sums_; }

  std::uint64_t balls_in(std::size_t i) const { return balls_[i]; }
  std::span<const std::uint64_t> ball_counts() const { return balls_; }
  /// Number of ball copies placed (exceeds t only under greedy-with-ties).
  std::uint64_t copies() const { return copies_; }
  /// Number of balls placed.
  std::uint64_t balls_placed() const { return t_; }

  void apply_ball(std::size_t bin, const BallSpec& ball) {
    add_copy(bin, ball);
    ++t_;
  }

  /// One ball, a full copy to each listed (distinct) bin; t advances once.
  void apply_copies(std::span<const std::size_t> bins, const BallSpec& ball) {
    for (std::size_t bin : bins) add_copy(bin, ball);
    ++t_;
  }

  bool operator==(const BasicLoadMatrix&) const = default;

 private:
  void add_copy(std::size_t bin, const BallSpec& ball) {
    const Load w = static_cast<Load>(ball.weight);
    for (std::uint32_t d : ball.dims) {
      loads_[d * bins_ + bin] += w;
      totals_[d] += w;
      bin_sums_[bin] += w;
    }
    ++balls_[bin];
    ++copies_;
  }

  std::size_t bins_;
  std::size_t dims_;
  std::vector<Load> loads_;  // dimension-major: loads_[d * bins_ + i]
  std::vector<Load> totals_;
  std::vector<Load> bin_sums_;
  std::vector<std::uint64_t> balls_;
  std::uint64_t copies_ = 0;
  std::uint64_t t_ = 0;
};

using IntLoadMatrix = BasicLoadMatrix<std::int64_t>;
using RealLoadMatrix = BasicLoadMatrix<double>;

template <class Load>
void apply_ball(BasicLoadMatrix<Load>& state, std::size_t bin, const BallSpec& ball) {
  state.apply_ball(bin, ball);
}

// ---------------------------------------------------------------------------
// Normalized view

template <class Load>
struct NormalizedState {
  std::size_t bins = 0;
  std::size_t dims = 0;
  std::vector<double> x;      // dimension-major, x[d * bins + i]
  std::vector<double> s;      // per bin
  std::vector<Load> scaled_s; // n * s_i; exact for integer loads
  std::vector<std::size_t> order;  // bins by s descending, ties by index

  double xi(std::size_t d, std::size_t i) const { return x[d * bins + i]; }
  /// s in rank order (rank 1 = most loaded first).
  std::vector<double> sorted_s() const {
    std::vector<double> out(order.size());
    for (std::size_t k = 0; k < order.size(); ++k) out[k] = s[order[k]];
    return out;
  }
};

/// n * s_i for every bin.
template <class Load>
std::vector<Load> scaled_sums(const BasicLoadMatrix<Load>& state) {
  const Load n = static_cast<Load>(state.bins());
  const Load grand = state.grand_total();
  std::vector<Load> out(state.bins());
  auto sums = state.bin_sums();
  for (std::size_t i = 0; i < state.bins(); ++i) out[i] = n * sums[i] - grand;
  return out;
}

/// Bins ordered by key descending; equal keys keep ascending bin index.
template <class Key>
std::vector<std::size_t> descending_order(std::span<const Key> keys) {
  std::vector<std::size_t> order(keys.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return keys[a] > keys[b]; });
  return order;
}

template <class Load>
NormalizedState<Load> normalize(const BasicLoadMatrix<Load>& state) {
  NormalizedState<Load> out;
  out.bins = state.bins();
  out.dims = state.dims();
  const auto n = static_cast<double>(state.bins());
  out.x.resize(state.bins() * state.dims());
  for (std::size_t d = 0; d < state.dims(); ++d) {
    const Load nl = static_cast<Load>(state.bins());
    const Load total = state.total(d);
    auto row = state.row(d);
    for (std::size_t i = 0; i < state.bins(); ++i)
      out.x[d * state.bins() + i] = static_cast<double>(nl * row[i] - total) / n;
  }
  out.scaled_s = scaled_sums(state);
  out.s.resize(state.bins());
  for (std::size_t i = 0; i < state.bins(); ++i)
    out.s[i] = static_cast<double>(out.scaled_s[i]) / n;
  out.order = descending_order<Load>(out.scaled_s);
  return out;
}

/// s sorted descending, without materializing x.
template <class Load>
std::vector<double> sorted_sum_loads(const BasicLoadMatrix<Load>& state) {
  const auto scaled = scaled_sums(state);
  const auto n = static_cast<double>(state.bins());
  std::vector<double> s(scaled.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = static_cast<double>(scaled[i]) / n;
  std::sort(s.begin(), s.end(), std::greater<>());
  return s;
}

}  // namespace mdbins
