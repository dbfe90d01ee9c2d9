#pragma once

// Gap statistics and unit-constant theoretical bound curves.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mdbins/core.hpp"
#include "mdbins/errors.hpp"

namespace mdbins {

struct GapReport {
  std::uint64_t t = 0;
  double max_gap = 0.0;             // max over dimensions of per_dim_gap
  std::vector<double> per_dim_gap;  // max_i L[d][i] - T[d]/n
  double sum_gap = 0.0;             // max_i s_i
  double ball_count_gap = 0.0;      // max balls in a bin - average
};

template <class Load>
GapReport gap_report(const BasicLoadMatrix<Load>& state) {
  GapReport r;
  r.t = state.balls_placed();
  const std::size_t n = state.bins();
  const auto nn = static_cast<double>(n);
  const Load nl = static_cast<Load>(n);
  // (n * max - total) is exact for integer loads; divide once at the end.
  auto scaled_to_gap = [&](Load scaled) {
    const double g = static_cast<double>(scaled) / nn;
    return g > 0.0 ? g : 0.0;
  };
  r.per_dim_gap.resize(state.dims());
  for (std::size_t d = 0; d < state.dims(); ++d) {
    auto row = state.row(d);
    const Load top = *std::max_element(row.begin(), row.end());
    r.per_dim_gap[d] = scaled_to_gap(nl * top - state.total(d));
  }
  r.max_gap = r.per_dim_gap.empty() ? 0.0
                                    : *std::max_element(r.per_dim_gap.begin(), r.per_dim_gap.end());
  auto sums = state.bin_sums();
  const Load top_sum = *std::max_element(sums.begin(), sums.end());
  r.sum_gap = scaled_to_gap(nl * top_sum - state.grand_total());
  auto balls = state.ball_counts();
  const std::uint64_t top_balls = *std::max_element(balls.begin(), balls.end());
  const auto scaled_balls = static_cast<std::int64_t>(n * top_balls) -
                            static_cast<std::int64_t>(state.copies());
  r.ball_count_gap = std::max(0.0, static_cast<double>(scaled_balls) / nn);
  return r;
}

// ---------------------------------------------------------------------------
// Bound curves

struct BoundInputs {
  std::size_t n = 0;
  std::size_t dims = 1;
  std::uint64_t m = 0;
  double f = 1.0;       // populated dims per ball (f or f* = Dq)
  double beta = 1.0;    // (1+beta) mixing probability; 1 for other processes
  double mean_weight = 1.0;  // W*
};

struct BoundCurves {
  double zeta = 0.1;
  double upper_dchoice_fixed_f = 0.0;  // lnln n
  double upper_dchoice_whp = 0.0;      // (mf/nD)^{1/2+zeta} lnln n
  double lower_fixed_f = 0.0;          // f lnln n / D
  double upper_beta = 0.0;             // ln n / beta
  double lower_beta = 0.0;             // f ln n / (D beta)
  double one_choice_heavy = 0.0;       // m/n + sqrt(m ln n / n)
  double weighted_scalar = 0.0;        // W* ln n
};

inline BoundCurves bound_curves(const BoundInputs& in, double zeta = 0.1) {
  if (in.n < 3) throw config_error("bound curves need n >= 3");
  if (!(zeta > 0.0)) throw config_error("zeta must be > 0");
  const double n = static_cast<double>(in.n);
  const double m = static_cast<double>(in.m);
  const double D = static_cast<double>(in.dims);
  const double ln_n = std::log(n);
  const double lnln_n = std::log(ln_n);
  BoundCurves c;
  c.zeta = zeta;
  c.upper_dchoice_fixed_f = lnln_n;
  c.upper_dchoice_whp = std::pow(m * in.f / (n * D), 0.5 + zeta) * lnln_n;
  c.lower_fixed_f = in.f * lnln_n / D;
  c.upper_beta = ln_n / in.beta;
  c.lower_beta = in.f * ln_n / (D * in.beta);
  c.one_choice_heavy = m / n + std::sqrt(m * ln_n / n);
  c.weighted_scalar = in.mean_weight * ln_n;
  return c;
}

/// Chernoff bound on Pr[Binomial > mu + t]: (mu / (mu + t))^{mu + t} e^t.
inline double chernoff_tail(double mu, double t) {
  if (!(mu > 0.0) || !(t >= 0.0)) throw config_error("chernoff_tail needs mu > 0, t >= 0");
  return std::exp((mu + t) * std::log(mu / (mu + t)) + t);
}

// ---------------------------------------------------------------------------
// Scaling fits

enum class Regressor { lnln_n, ln_n, sqrt_m_ln_n_over_n };

inline std::string_view to_string(Regressor r) {
  switch (r) {
    case Regressor::lnln_n: return "lnln-n";
    case Regressor::ln_n: return "ln-n";
    case Regressor::sqrt_m_ln_n_over_n: return "sqrt-m-ln-n-over-n";
  }
  return "?";
}

struct ScalingPoint {
  double n = 0.0;
  double gap = 0.0;
  double m = 0.0;  // only read by sqrt_m_ln_n_over_n
};

struct ScalingFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

inline double regressor_value(Regressor r, const ScalingPoint& p) {
  switch (r) {
    case Regressor::lnln_n: return std::log(std::log(p.n));
    case Regressor::ln_n: return std::log(p.n);
    case Regressor::sqrt_m_ln_n_over_n: return std::sqrt(p.m * std::log(p.n) / p.n);
  }
  return 0.0;
}

/// Ordinary least squares of gap on the regressor. R^2 is NaN when the gaps
/// have no spread (undefined coefficient of determination).
inline ScalingFit fit_scaling(std::span<const ScalingPoint> points, Regressor regressor) {
  if (points.size() < 3) throw config_error("fit_scaling needs at least 3 points");
  std::vector<double> xs;
  xs.reserve(points.size());
  double mx = 0.0, my = 0.0;
  for (const auto& p : points) {
    xs.push_back(regressor_value(regressor, p));
    mx += xs.back();
    my += p.gap;
  }
  const double k = static_cast<double>(points.size());
  mx /= k;
  my /= k;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = points[i].gap - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 1e-300) || !std::isfinite(sxx))
    throw config_error("singular regression: regressor values are not distinct");
  ScalingFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double r = points[i].gap - (fit.intercept + fit.slope * xs[i]);
    sse += r * r;
  }
  fit.r2 = syy > 0.0 ? 1.0 - sse / syy : std::numeric_limits<double>::quiet_NaN();
  return fit;
}

}  // namespace mdbins
