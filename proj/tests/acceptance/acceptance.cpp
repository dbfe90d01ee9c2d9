// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance            run every criterion
//   acceptance 3 7        run only the listed criteria
//
// Exit status is 0 only when every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mdbins/mdbins.hpp"
#include "property_checks.hpp"

namespace {

using mdbins::AllocationConfig;
using mdbins::BallSourceSpec;
using mdbins::ProcessSpec;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream out;
  out.precision(digits);
  out << v;
  return out.str();
}

AllocationConfig make_config(std::size_t n, std::size_t dims, std::uint64_t m, BallSourceSpec source,
                             ProcessSpec process, std::vector<std::uint64_t> checkpoints) {
  AllocationConfig c;
  c.n = n;
  c.dims = dims;
  c.m = m;
  c.source = source;
  c.process = process;
  c.checkpoints = std::move(checkpoints);
  return c;
}

/// Runs `trials` seeded trials of `base` (seed derived from root, point,
/// trial) and returns the records in trial order.
std::vector<mdbins::TrajectoryRecord> run_trials(const AllocationConfig& base, std::size_t trials,
                                                 std::uint64_t root, std::uint64_t point,
                                                 const std::optional<mdbins::PotentialParams>& pot = {}) {
  std::vector<mdbins::TrajectoryRecord> out(trials);
  mdbins::parallel_for(trials, [&](std::size_t k) {
    AllocationConfig c = base;
    c.seed = mdbins::derive_seed(root, point, k);
    out[k] = mdbins::run_trial(c, pot);
  });
  return out;
}

const mdbins::CheckpointRow& row_at(const mdbins::TrajectoryRecord& rec, std::uint64_t t) {
  for (const auto& r : rec.rows)
    if (r.t == t) return r;
  throw std::runtime_error("missing checkpoint " + std::to_string(t));
}

std::vector<double> column(const std::vector<mdbins::TrajectoryRecord>& recs, std::uint64_t t,
                           double mdbins::CheckpointRow::*field) {
  std::vector<double> v;
  for (const auto& r : recs) v.push_back(row_at(r, t).*field);
  return v;
}

double sample_variance(const std::vector<double>& v) {
  const double mu = mdbins::mean(v);
  double s = 0.0;
  for (double x : v) s += (x - mu) * (x - mu);
  return s / static_cast<double>(v.size() - 1);
}

// 1. Exact oracle against 1e5 simulated trials per configuration.
Verdict criterion1() {
  struct Case {
    std::string label;
    std::string plan;
  };
  std::vector<Case> cases;
  const std::string base = "n = 2\nsource.variant = fixed-f-uniform\nsource.f = 1\nseed = 101\n";
  for (int m : {2, 3})
    for (const char* kind : {"one-choice", "d-choice", "greedy-with-ties"}) {
      std::string plan = base + "D = 1\nm = " + std::to_string(m) + "\nprocess.kind = " + kind + "\n";
      if (std::string(kind) != "one-choice") plan += "process.d = 2\n";
      cases.push_back({std::string(kind) + " m=" + std::to_string(m), plan});
    }
  cases.push_back({"D=2 d-choice m=2", base + "D = 2\nm = 2\nprocess.kind = d-choice\nprocess.d = 2\n"});

  Verdict v{true, ""};
  double worst_p = 1.0;
  for (const auto& c : cases) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto results = mdbins::oracle_check(mdbins::parse_plan(c.plan), 100000);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto& r = results.at(0);
    worst_p = std::min(worst_p, r.chi.p_value);
    if (!r.passed() || secs >= 60.0) {
      v.pass = false;
      v.detail += "[" + c.label + " p=" + fmt(r.chi.p_value) + (r.forbidden ? " forbidden" : "") +
                  " " + fmt(secs) + "s] ";
    }
  }
  v.detail += std::to_string(cases.size()) + " configs, min p=" + fmt(worst_p);
  return v;
}

// 2. Paired seeds: the d = 2 gap is below the one-choice gap.
Verdict criterion2() {
  const std::size_t n = 1024, trials = 50;
  const auto one = run_trials(make_config(n, 1, n, BallSourceSpec::fixed_uniform(1),
                                          ProcessSpec::one_choice(), {n}), trials, 202, 0);
  const auto two = run_trials(make_config(n, 1, n, BallSourceSpec::fixed_uniform(1),
                                          ProcessSpec::d_choice(2), {n}), trials, 202, 0);
  std::size_t wins = 0;
  for (std::size_t k = 0; k < trials; ++k) wins += two[k].final_row().max_gap < one[k].final_row().max_gap;
  const double frac = static_cast<double>(wins) / trials;
  return {frac >= 0.95, "d=2 smaller in " + std::to_string(wins) + "/" + std::to_string(trials) +
                            " pairs; medians d=1 " +
                            fmt(mdbins::median(column(one, n, &mdbins::CheckpointRow::max_gap))) +
                            ", d=2 " + fmt(mdbins::median(column(two, n, &mdbins::CheckpointRow::max_gap)))};
}

// 3. Median max_gap at m = 100n versus m = 1000n.
Verdict criterion3() {
  const std::size_t n = 256, trials = 30;
  const std::uint64_t early = 100 * n, late = 1000 * n;
  const auto recs = run_trials(make_config(n, 16, late, BallSourceSpec::fixed_uniform(4),
                                           ProcessSpec::d_choice(2), {early, late}), trials, 303, 0);
  const double a = mdbins::median(column(recs, early, &mdbins::CheckpointRow::max_gap));
  const double b = mdbins::median(column(recs, late, &mdbins::CheckpointRow::max_gap));
  const double sa = mdbins::median(column(recs, early, &mdbins::CheckpointRow::sum_gap));
  const double sb = mdbins::median(column(recs, late, &mdbins::CheckpointRow::sum_gap));
  return {std::abs(a - b) <= 2.0, "median max_gap 100n=" + fmt(a) + " 1000n=" + fmt(b) +
                                      " (|diff| " + fmt(std::abs(a - b)) + ", limit 2); median sum_gap " +
                                      fmt(sa) + " -> " + fmt(sb)};
}

// 4. Median gap against lnln n over a sweep, two disjoint seed batches.
Verdict criterion4() {
  const std::vector<std::size_t> ns{1u << 8, 1u << 10, 1u << 12, 1u << 14, 1u << 16};
  const std::size_t trials = 30;
  std::vector<mdbins::ScalingPoint> batch[2];
  std::string medians;
  for (std::size_t p = 0; p < ns.size(); ++p) {
    const std::size_t n = ns[p];
    const auto cfg = make_config(n, 1, n, BallSourceSpec::fixed_uniform(1), ProcessSpec::d_choice(2), {n});
    for (int b = 0; b < 2; ++b) {
      const auto recs = run_trials(cfg, trials, 404 + b, p);
      const double med = mdbins::median(column(recs, n, &mdbins::CheckpointRow::max_gap));
      batch[b].push_back({static_cast<double>(n), med, static_cast<double>(n)});
      medians += (b == 0 ? " " : "/") + fmt(med);
    }
  }
  const auto fa = mdbins::fit_scaling(batch[0], mdbins::Regressor::lnln_n);
  const auto fb = mdbins::fit_scaling(batch[1], mdbins::Regressor::lnln_n);
  const auto la = mdbins::fit_scaling(batch[0], mdbins::Regressor::ln_n);
  const bool r2_ok = fa.r2 >= 0.9;
  const bool slope_ok = std::abs(fb.slope - fa.slope) <= 0.5 * std::abs(fa.slope);
  return {r2_ok && slope_ok, "R2=" + fmt(fa.r2) + " (batch2 " + fmt(fb.r2) + ", ln n " + fmt(la.r2) +
                                 "), slopes " + fmt(fa.slope) + " / " + fmt(fb.slope) +
                                 "; medians per n (batch1/batch2):" + medians};
}

// 5. Gap ratio between consecutive beta levels.
Verdict criterion5() {
  const std::size_t n = 4096, trials = 30;
  const std::uint64_t m = 100 * n;
  const std::vector<double> betas{0.125, 0.25, 0.5};
  std::vector<double> med;
  for (std::size_t p = 0; p < betas.size(); ++p) {
    const auto recs = run_trials(make_config(n, 1, m, BallSourceSpec::fixed_uniform(1),
                                             ProcessSpec::beta_choice(betas[p]), {m}), trials, 505, p);
    med.push_back(mdbins::median(column(recs, m, &mdbins::CheckpointRow::max_gap)));
  }
  const double r1 = med[0] / med[1], r2 = med[1] / med[2];
  const bool ok = r1 >= 1.4 && r1 <= 3.0 && r2 >= 1.4 && r2 <= 3.0;
  return {ok, "medians " + fmt(med[0]) + ", " + fmt(med[1]) + ", " + fmt(med[2]) + "; ratios " +
                  fmt(r1) + ", " + fmt(r2)};
}

// 6. One-choice heavy case: ball_count_gap ratio between 4e4 n and 1e4 n.
Verdict criterion6() {
  const std::size_t n = 256, trials = 30;
  const std::uint64_t a = 10000 * n, b = 40000 * n;
  const auto recs = run_trials(make_config(n, 1, b, BallSourceSpec::fixed_uniform(1),
                                           ProcessSpec::one_choice(), {a, b}), trials, 606, 0);
  const double ga = mdbins::median(column(recs, a, &mdbins::CheckpointRow::ball_count_gap));
  const double gb = mdbins::median(column(recs, b, &mdbins::CheckpointRow::ball_count_gap));
  const double ratio = gb / ga;
  return {ratio >= 1.4 && ratio <= 2.6,
          "median ball_count_gap " + fmt(ga) + " -> " + fmt(gb) + ", ratio " + fmt(ratio)};
}

// 7. Potential plateau and drift sign along a d = 2 trajectory.
Verdict criterion7() {
  const std::size_t n = 1024, trials = 12, drift_samples = 3000;
  const std::uint64_t m = 1000 * n;
  const auto source = BallSourceSpec::fixed_uniform(2);
  const auto params = mdbins::default_params(mdbins::PotentialVariant::unweighted_grouped, 2.0, 0.25);
  const auto cfg = make_config(n, 8, m, source, ProcessSpec::d_choice(2), {10 * n, 100 * n, m});
  const auto recs = run_trials(cfg, trials, 707, 0, params);
  std::vector<double> means;
  for (std::uint64_t t : {10 * n, 100 * n, m}) {
    std::vector<double> g;
    for (const auto& r : recs) g.push_back(*row_at(r, t).gamma);
    means.push_back(mdbins::mean(g));
  }
  const double spread = *std::max_element(means.begin(), means.end()) /
                        *std::min_element(means.begin(), means.end());

  // Ten states of trial 0 at t = 100n, 200n, ..., 1000n.
  AllocationConfig c = cfg;
  c.seed = mdbins::derive_seed(707, 0, 0);
  c.checkpoints.clear();
  mdbins::Engine rng(mdbins::derive_seed(707, 1, 0));
  std::size_t ok_states = 0;
  std::string drifts;
  for (std::uint64_t k = 1; k <= 10; ++k) {
    const auto state = mdbins::state_at<std::int64_t>(c, 100 * n * k);
    const auto e = mdbins::drift_estimate(state, c.process, source, params, drift_samples, rng);
    ok_states += e.mean_dgamma <= 3.0 * e.ci_dgamma;
    drifts += " " + fmt(e.mean_dgamma, 3) + "+-" + fmt(e.ci_dgamma, 2);
  }
  const bool ok = spread <= 2.0 && ok_states >= 8;
  return {ok, "mean Gamma " + fmt(means[0]) + ", " + fmt(means[1]) + ", " + fmt(means[2]) +
                  " (max/min " + fmt(spread) + "); drift <= 3 CI in " + std::to_string(ok_states) +
                  "/10 states:" + drifts};
}

// 8. Parallel rounds against sequential greedy with ties.
Verdict criterion8() {
  const std::size_t n = 256, trials = 200;
  const auto par = run_trials(make_config(n, 1, n, BallSourceSpec::fixed_uniform(1),
                                          ProcessSpec::parallel_rounds(2), {n}), trials, 808, 0);
  const auto seq = run_trials(make_config(n, 1, n, BallSourceSpec::fixed_uniform(1),
                                          ProcessSpec::greedy_with_ties(2), {n}), trials, 808, 1);
  const auto a = column(par, n, &mdbins::CheckpointRow::sum_gap);
  const auto b = column(seq, n, &mdbins::CheckpointRow::sum_gap);
  const double diff = mdbins::mean(a) - mdbins::mean(b);
  const double pooled = 1.96 * std::sqrt(sample_variance(a) / trials + sample_variance(b) / trials);
  std::vector<double> rounds;
  for (const auto& r : par) rounds.push_back(static_cast<double>(*r.rounds_used));
  const double med_rounds = mdbins::median(rounds);
  const double limit = 2.0 * (std::log2(std::log2(static_cast<double>(n))) + 2.0);
  const bool ok = std::abs(diff) <= pooled && med_rounds <= limit;
  return {ok, "mean sum_gap parallel " + fmt(mdbins::mean(a)) + " vs ties " + fmt(mdbins::mean(b)) +
                  " (|diff| " + fmt(std::abs(diff)) + ", pooled CI " + fmt(pooled) +
                  "); median rounds " + fmt(med_rounds) + " (limit " + fmt(limit) + ")"};
}

// 9. Empirical Binomial(m/n, f/D) tails under the Chernoff bound.
Verdict criterion9() {
  const int trials_per_ball = 1000;  // m / n
  const double q = 1.0 / 100.0;      // f / D with f = 1, D = 100
  const double mu = trials_per_ball * q;
  std::mt19937_64 rng(909);
  std::binomial_distribution<int> binom(trials_per_ball, q);
  constexpr int kDraws = 1000000;
  std::vector<int> draws(kDraws);
  for (auto& x : draws) x = binom(rng);
  Verdict v{true, ""};
  for (double t : {3.0, 6.0, 12.0}) {
    const auto hits = std::count_if(draws.begin(), draws.end(), [&](int x) { return x >= mu + t; });
    const double emp = static_cast<double>(hits) / kDraws;
    const double bound = mdbins::chernoff_tail(mu, t);
    v.pass = v.pass && emp <= bound;
    v.detail += "t=" + fmt(t) + ": " + fmt(emp) + " <= " + fmt(bound) + "; ";
  }
  return v;
}

// 10. Randomized invariant suite.
Verdict criterion10() {
  Verdict v{true, ""};
  mdbins::Engine rng(1010);
  for (const auto& check : mdbins_props::all_checks()) {
    const std::string why = check.run(rng, 1000);
    if (!why.empty()) {
      v.pass = false;
      v.detail += std::string(check.name) + ": " + why + "; ";
    }
  }
  v.detail += std::to_string(mdbins_props::all_checks().size()) + " properties x 1000 cases";
  return v;
}

struct Criterion {
  int id;
  double limit_seconds;
  std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, 7 * 60.0, criterion1}, {2, 60.0, criterion2},   {3, 300.0, criterion3},
      {4, 600.0, criterion4},    {5, 600.0, criterion5},  {6, 600.0, criterion6},
      {7, 900.0, criterion7},    {8, 300.0, criterion8},  {9, 60.0, criterion9},
      {10, 120.0, criterion10}};
  std::set<int> selected;
  for (int k = 1; k < argc; ++k) selected.insert(std::atoi(argv[k]));

  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = v.pass && secs < c.limit_seconds;
    failures += !pass;
    std::printf("criterion %2d: %s  %s  [%.1fs, limit %.0fs]\n", c.id, pass ? "PASS" : "FAIL",
                v.detail.c_str(), secs, c.limit_seconds);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
