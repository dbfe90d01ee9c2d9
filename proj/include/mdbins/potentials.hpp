#pragma once

// Exponential potential functions over the sorted sum-load vector and a
// Monte Carlo estimator of their one-step drift.
//
// With s sorted descending (rank i = 1 is the most loaded bin):
//   unweighted-grouped  Phi = sum e^{ a s_i} / i,        Psi = sum e^{-a s_i} / i
//   weighted-ranked     Phi = sum e^{ a s_i} / (n^2+i),  Psi = sum e^{-a s_i} / (n^2+n-i+1)
//   beta-plain          Phi = sum e^{ a s_i},            Psi = sum e^{-a s_i}
// and Gamma = Phi + Psi.

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
#include "mdbins/processes.hpp"
#include "mdbins/random.hpp"

namespace mdbins {

enum class PotentialVariant { unweighted_grouped, weighted_ranked, beta_plain };

inline std::string_view to_string(PotentialVariant v) {
  switch (v) {
    case PotentialVariant::unweighted_grouped: return "unweighted-grouped";
    case PotentialVariant::weighted_ranked: return "weighted-ranked";
    case PotentialVariant::beta_plain: return "beta-plain";
  }
  return "?";
}

inline std::optional<PotentialVariant> parse_potential_variant(std::string_view s) {
  for (auto v : {PotentialVariant::unweighted_grouped, PotentialVariant::weighted_ranked,
                 PotentialVariant::beta_plain})
    if (to_string(v) == s) return v;
  return std::nullopt;
}

struct PotentialParams {
  PotentialVariant variant = PotentialVariant::unweighted_grouped;
  double epsilon = 0.25;
  double theta = 5.0;
  double gamma1 = 0.2;
  double gamma2 = 0.8;
  double gamma3 = 0.4;
  double gamma4 = 0.6;
  double alpha = 0.125;
  double S = 1.0;        // weighted only
  double lambda = 0.0;   // weighted only

  /// Checks the ordering constraints of the variant's constants.
  void validate() const {
    constexpr double tol = 1e-12;
    if (!(epsilon > 0.0 && epsilon <= 0.25)) throw config_error("epsilon must lie in (0, 1/4]");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw config_error("alpha must be > 0");
    if (!(theta > 1.0) || std::abs(theta * gamma1 - 1.0) > tol)
      throw config_error("theta must exceed 1 with theta * gamma1 = 1");
    if (variant == PotentialVariant::weighted_ranked) {
      // 0 < g1 < g2 < 1/2 < g4 < g3, g2 + g3 > 1, g1 + g4 < 1, g2 < 7/16
      if (!(0.0 < gamma1 && gamma1 < gamma2 && gamma2 < 0.5 && 0.5 < gamma4 && gamma4 < gamma3))
        throw config_error("weighted constants need 0 < g1 < g2 < 1/2 < g4 < g3");
      if (!(gamma2 + gamma3 > 1.0) || !(gamma1 + gamma4 < 1.0) || !(gamma2 < 7.0 / 16.0))
        throw config_error("weighted constants need g2+g3 > 1, g1+g4 < 1, g2 < 7/16");
      if (!(S >= 1.0)) throw config_error("S must be >= 1");
      if (!(lambda > 0.0)) throw config_error("lambda must be > 0");
    } else {
      // 0 < g1 < g3 < 1/2 < g4 < g2 < 1, g1 + g2 = 1, g3 + g4 = 1
      if (!(0.0 < gamma1 && gamma1 < gamma3 && gamma3 < 0.5 && 0.5 < gamma4 &&
            gamma4 < gamma2 && gamma2 < 1.0))
        throw config_error("constants need 0 < g1 < g3 < 1/2 < g4 < g2 < 1");
      if (std::abs(gamma1 + gamma2 - 1.0) > tol || std::abs(gamma3 + gamma4 - 1.0) > tol)
        throw config_error("constants need g1 + g2 = 1 and g3 + g4 = 1");
    }
  }
};

/// Default constants for a variant. `load_per_ball` is f (fixed-f) or the
/// mean f* (variable f / scalar weights). The weighted variant needs S and
/// lambda.
inline PotentialParams default_params(PotentialVariant variant, double load_per_ball,
                                      double epsilon, std::optional<double> S = std::nullopt,
                                      std::optional<double> lambda = std::nullopt) {
  if (!(epsilon > 0.0 && epsilon <= 0.25)) throw config_error("epsilon must lie in (0, 1/4]");
  if (!(load_per_ball > 0.0)) throw config_error("f must be > 0");
  PotentialParams p;
  p.variant = variant;
  p.epsilon = epsilon;
  p.theta = 5.0;
  if (variant == PotentialVariant::weighted_ranked) {
    if (!S || !lambda) throw config_error("weighted-ranked potential requires S and lambda");
    p.gamma1 = 0.2;
    p.gamma2 = 0.4;
    p.gamma3 = 0.7;
    p.gamma4 = 0.6;
    p.S = *S;
    p.lambda = *lambda;
    p.alpha = std::min({epsilon / (6.0 * *S), 2.0 / *lambda, epsilon / (2.0 * load_per_ball)});
  } else {
    p.gamma1 = 0.2;
    p.gamma2 = 0.8;
    p.gamma3 = 0.4;
    p.gamma4 = 0.6;
    p.alpha = epsilon / (2.0 * load_per_ball);
  }
  p.validate();
  return p;
}

struct PotentialValue {
  double phi = 0.0;
  double psi = 0.0;
  double gamma = 0.0;
};

/// Maximal runs of equal values in a non-increasing vector, as
/// (1-based start rank, size) pairs.
struct EquiLoadGroup {
  std::size_t start = 1;
  std::size_t size = 0;
  bool operator==(const EquiLoadGroup&) const = default;
};

inline std::vector<EquiLoadGroup> equi_load_groups(std::span<const double> sorted_s) {
  std::vector<EquiLoadGroup> groups;
  for (std::size_t k = 0; k < sorted_s.size(); ++k) {
    if (groups.empty() || sorted_s[k] != sorted_s[k - 1])
      groups.push_back({k + 1, 1});
    else
      ++groups.back().size;
  }
  return groups;
}

/// Rank of a fractional group boundary n * gamma (ceiling, at least 1).
inline std::size_t boundary_rank(std::size_t n, double gamma) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(static_cast<double>(n) * gamma - 1e-12)));
}

inline constexpr double kMaxExponent = 700.0;

/// Potentials of a descending-sorted sum-load vector. Throws
/// potential_overflow when any |alpha * s_i| exceeds 700.
inline PotentialValue potential(std::span<const double> sorted_s, const PotentialParams& params) {
  const std::size_t n = sorted_s.size();
  const long double nn = static_cast<long double>(n);
  const long double a = params.alpha;
  long double phi = 0.0L;
  long double psi = 0.0L;
  for (std::size_t k = 0; k < n; ++k) {
    const long double ex = a * static_cast<long double>(sorted_s[k]);
    if (std::abs(ex) > kMaxExponent)
      throw potential_overflow("potential exponent " + std::to_string(static_cast<double>(ex)) +
                               " exceeds the representable range");
    const long double rank = static_cast<long double>(k + 1);
    long double phi_w = 1.0L;
    long double psi_w = 1.0L;
    switch (params.variant) {
      case PotentialVariant::unweighted_grouped:
        phi_w = psi_w = rank;
        break;
      case PotentialVariant::weighted_ranked:
        phi_w = nn * nn + rank;
        psi_w = nn * nn + nn - rank + 1.0L;
        break;
      case PotentialVariant::beta_plain:
        break;
    }
    phi += std::exp(ex) / phi_w;
    psi += std::exp(-ex) / psi_w;
  }
  PotentialValue v;
  v.phi = static_cast<double>(phi);
  v.psi = static_cast<double>(psi);
  v.gamma = v.phi + v.psi;
  return v;
}

template <class Load>
PotentialValue gamma(const NormalizedState<Load>& state, const PotentialParams& params) {
  const auto s = state.sorted_s();
  return potential(s, params);
}

template <class Load>
PotentialValue gamma(const BasicLoadMatrix<Load>& state, const PotentialParams& params) {
  const auto s = sorted_sum_loads(state);
  return potential(s, params);
}

// ---------------------------------------------------------------------------
// Drift

struct DriftEstimate {
  std::size_t samples = 0;
  PotentialValue start;
  double mean_dgamma = 0.0;
  double ci_dgamma = 0.0;  // 95% normal-approximation half-width
  double mean_dphi = 0.0;
  double ci_dphi = 0.0;
  double mean_dpsi = 0.0;
  double ci_dpsi = 0.0;
};

namespace detail {

struct RunningMoments {
  std::size_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;
  void add(double v) {
    ++count;
    const double delta = v - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (v - mean);
  }
  double half_width() const {
    if (count < 2) return 0.0;
    const double var = m2 / static_cast<double>(count - 1);
    return 1.959963984540054 * std::sqrt(var / static_cast<double>(count));
  }
};

}  // namespace detail

/// Monte Carlo estimate of E[Gamma(t+1) - Gamma(t) | state] from `samples`
/// independent one-step continuations of the frozen state.
template <class Load>
DriftEstimate drift_estimate(const BasicLoadMatrix<Load>& state, const ProcessSpec& process,
                             const BallSourceSpec& source, const PotentialParams& params,
                             std::size_t samples, Engine& rng) {
  if (samples < 100) throw config_error("drift_estimate requires at least 100 samples");
  DriftEstimate out;
  out.samples = samples;
  out.start = gamma(state, params);
  BallGenerator gen(source, state.dims());
  BallSpec ball;
  std::vector<std::size_t> scratch;
  detail::RunningMoments dg, dphi, dpsi;
  for (std::size_t k = 0; k < samples; ++k) {
    BasicLoadMatrix<Load> next = state;
    gen.next(rng, ball);
    place_ball(next, process, ball, rng, scratch);
    const PotentialValue after = gamma(next, params);
    dg.add(after.gamma - out.start.gamma);
    dphi.add(after.phi - out.start.phi);
    dpsi.add(after.psi - out.start.psi);
  }
  out.mean_dgamma = dg.mean;
  out.ci_dgamma = dg.half_width();
  out.mean_dphi = dphi.mean;
  out.ci_dphi = dphi.half_width();
  out.mean_dpsi = dpsi.mean;
  out.ci_dpsi = dpsi.half_width();
  return out;
}

// ---------------------------------------------------------------------------
// Moment generating function of f ~ Binomial(D, q)

inline double mgf_binomial(double z, std::size_t dims, double q) {
  return std::pow(1.0 - q + q * std::exp(z), static_cast<double>(dims));
}

/// E[f^2 e^{z f}] for f ~ Binomial(D, q).
inline double mgf_binomial_second_derivative(double z, std::size_t dims, double q) {
  const double D = static_cast<double>(dims);
  const double qe = q * std::exp(z);
  const double base = 1.0 - q + qe;
  double value = D * qe * std::pow(base, D - 1.0);
  if (dims >= 2) value += D * (D - 1.0) * qe * qe * std::pow(base, D - 2.0);
  return value;
}

/// S with M''(z) < 2S over |z| < lambda/2: half the maximum of M'' on a
/// 1000-point grid of the open interval, clamped to at least 1.
inline double mgf_bound_S(std::size_t dims, double q, double lambda) {
  constexpr int kGrid = 1000;
  double best = 0.0;
  for (int k = 0; k < kGrid; ++k) {
    const double z = -lambda / 2.0 + lambda * (k + 0.5) / kGrid;
    best = std::max(best, mgf_binomial_second_derivative(z, dims, q));
  }
  return std::max(1.0, best / 2.0);
}

}  // namespace mdbins
