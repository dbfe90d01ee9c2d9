#pragma once

// Experiment plan files: flat `key = value` lines with dotted keys.
//
//   # comment
//   n = 1024
//   D = 1
//   m = 100n                 # integer, or a multiple of n with suffix `n`
//   seed = 7
//   checkpoints = 0,10n,m    # optional; entries as for m, or `m`
//   source.variant = fixed-f-uniform
//   source.f = 1
//   process.kind = d-choice
//   process.d = 2
//   trials = 30
//   sweep.param = n
//   sweep.values = 256,1024,4096
//   potential.variant = unweighted-grouped
//   potential.epsilon = 0.25
//   record_potentials = true
//   output = out/run
//
// See README.md for the full key list.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mdbins/config.hpp"
#include "mdbins/core.hpp"
#include "mdbins/errors.hpp"
#include "mdbins/potentials.hpp"
#include "mdbins/processes.hpp"

namespace mdbins {

/// A ball count: either absolute or a multiple of n. `whole_m` stands for m.
struct CountExpr {
  double factor = 0.0;
  bool per_n = false;
  bool whole_m = false;

  std::uint64_t resolve(std::size_t n, std::uint64_t m) const {
    if (whole_m) return m;
    const double v = per_n ? factor * static_cast<double>(n) : factor;
    return static_cast<std::uint64_t>(std::llround(v));
  }
};

struct PotentialSettings {
  PotentialVariant variant = PotentialVariant::unweighted_grouped;
  double epsilon = 0.25;
  std::optional<double> S;
  std::optional<double> lambda;
};

struct SweepAxis {
  std::string param;
  std::vector<std::string> values;
};

inline const std::vector<std::string>& sweep_parameters() {
  static const std::vector<std::string> names{"n", "m", "d", "beta", "f", "q", "D"};
  return names;
}

struct ExperimentPlan {
  AllocationConfig base;  // base.m / base.checkpoints resolved from the exprs below
  CountExpr m;
  std::vector<CountExpr> checkpoints;  // empty: defaults
  std::optional<SweepAxis> sweep;
  std::uint64_t trials = 1;
  std::optional<PotentialSettings> potential;
  bool record_potentials = false;
  std::string output;

  std::size_t points() const { return sweep ? sweep->values.size() : 1; }
  std::string point_label(std::size_t k) const { return sweep ? sweep->values.at(k) : ""; }

  /// Validated configuration of sweep point k. The seed field holds the
  /// plan's root seed; trials derive their own.
  AllocationConfig point_config(std::size_t k) const;

  /// Potential parameters for a resolved configuration.
  PotentialParams potential_params(const AllocationConfig& config) const;

  void validate() const {
    if (trials < 1) throw config_error("trials must be >= 1");
    if (record_potentials && !potential)
      throw config_error("record_potentials requires potential.variant");
    for (std::size_t k = 0; k < points(); ++k) {
      const auto config = point_config(k);
      if (potential) potential_params(config);
    }
  }
};

namespace plan_detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto piece = trim(s.substr(start, comma == std::string_view::npos ? s.npos : comma - start));
    if (!piece.empty()) out.push_back(piece);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline double parse_real(const std::string& key, std::string_view v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
    throw config_error("key '" + key + "': expected a number, got '" + std::string(v) + "'");
  return out;
}

inline std::uint64_t parse_count(const std::string& key, std::string_view v) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw config_error("key '" + key + "': expected a non-negative integer, got '" +
                       std::string(v) + "'");
  return out;
}

inline CountExpr parse_count_expr(const std::string& key, std::string_view v, bool allow_m) {
  if (allow_m && v == "m") return {0.0, false, true};
  CountExpr e;
  if (!v.empty() && v.back() == 'n') {
    e.per_n = true;
    v.remove_suffix(1);
    e.factor = v.empty() ? 1.0 : parse_real(key, v);
  } else {
    e.factor = static_cast<double>(parse_count(key, v));
  }
  if (e.factor < 0.0) throw config_error("key '" + key + "': count must be >= 0");
  return e;
}

inline bool parse_bool(const std::string& key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw config_error("key '" + key + "': expected true or false");
}

inline WeightDistribution parse_weight(const std::string& key, std::string_view v) {
  const auto colon = v.find(':');
  const std::string kind = trim(v.substr(0, colon));
  const auto args = colon == std::string_view::npos ? std::vector<std::string>{}
                                                    : split_list(v.substr(colon + 1));
  auto arg = [&](std::size_t i) {
    if (i >= args.size()) throw config_error("key '" + key + "': missing argument for " + kind);
    return parse_real(key, args[i]);
  };
  if (kind == "constant") return WeightDistribution::constant(arg(0));
  if (kind == "uniform") return WeightDistribution::uniform(arg(0), arg(1));
  if (kind == "exponential") return WeightDistribution::exponential(arg(0));
  throw config_error("key '" + key + "': unknown weight distribution '" + kind + "'");
}

}  // namespace plan_detail

inline ExperimentPlan parse_plan(std::string_view text) {
  using namespace plan_detail;
  std::map<std::string, std::string> kv;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw config_error("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (kv.count(key)) throw config_error("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    kv[key] = value;
  }

  ExperimentPlan plan;
  AllocationConfig& c = plan.base;
  std::optional<SourceVariant> variant;
  BallSourceSpec& src = c.source;
  src = BallSourceSpec{};
  bool m_set = false;
  std::optional<std::string> sweep_param;
  std::optional<std::string> sweep_values;
  PotentialSettings pot;
  bool pot_set = false;

  for (const auto& [key, value] : kv) {
    if (key == "n") c.n = parse_count(key, value);
    else if (key == "D") c.dims = parse_count(key, value);
    else if (key == "m") { plan.m = parse_count_expr(key, value, false); m_set = true; }
    else if (key == "seed") c.seed = parse_count(key, value);
    else if (key == "checkpoints") {
      for (const auto& item : split_list(value))
        plan.checkpoints.push_back(parse_count_expr(key, item, true));
    }
    else if (key == "source.variant") {
      variant = parse_source_variant(value);
      if (!variant) throw config_error("key 'source.variant': unknown variant '" + value + "'");
    }
    else if (key == "source.f") src.f = parse_count(key, value);
    else if (key == "source.dim_weights") {
      for (const auto& item : split_list(value)) src.dim_weights.push_back(parse_real(key, item));
    }
    else if (key == "source.q") src.q = parse_real(key, value);
    else if (key == "source.weight") src.weight = parse_weight(key, value);
    else if (key == "process.kind") {
      auto kind = parse_process_kind(value);
      if (!kind) throw config_error("key 'process.kind': unknown kind '" + value + "'");
      c.process.kind = *kind;
    }
    else if (key == "process.d") c.process.d = parse_count(key, value);
    else if (key == "process.beta") c.process.beta = parse_real(key, value);
    else if (key == "trials") plan.trials = parse_count(key, value);
    else if (key == "sweep.param") sweep_param = value;
    else if (key == "sweep.values") sweep_values = value;
    else if (key == "potential.variant") {
      auto v = parse_potential_variant(value);
      if (!v) throw config_error("key 'potential.variant': unknown variant '" + value + "'");
      pot.variant = *v;
      pot_set = true;
    }
    else if (key == "potential.epsilon") pot.epsilon = parse_real(key, value);
    else if (key == "potential.S") pot.S = parse_real(key, value);
    else if (key == "potential.lambda") pot.lambda = parse_real(key, value);
    else if (key == "record_potentials") plan.record_potentials = parse_bool(key, value);
    else if (key == "output") plan.output = value;
    else throw config_error("unknown key '" + key + "'");
  }

  if (!variant) throw config_error("missing key 'source.variant'");
  src.variant = *variant;
  if (!m_set) throw config_error("missing key 'm'");
  if (!kv.count("process.kind")) throw config_error("missing key 'process.kind'");
  if (c.process.kind == ProcessKind::one_choice) c.process.d = 1;
  if (c.process.kind == ProcessKind::beta_choice) c.process.d = 2;
  if (pot_set) plan.potential = pot;
  else if (kv.count("potential.epsilon") || kv.count("potential.S") || kv.count("potential.lambda"))
    throw config_error("potential.* keys require potential.variant");

  if (sweep_param.has_value() != sweep_values.has_value())
    throw config_error("sweep.param and sweep.values must be given together");
  if (sweep_param) {
    const auto& names = sweep_parameters();
    if (std::find(names.begin(), names.end(), *sweep_param) == names.end())
      throw config_error("unknown sweep parameter '" + *sweep_param + "'");
    SweepAxis axis{*sweep_param, split_list(*sweep_values)};
    if (axis.values.empty()) throw config_error("sweep.values is empty");
    plan.sweep = std::move(axis);
  }
  plan.validate();
  return plan;
}

inline ExperimentPlan load_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot read plan file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_plan(buf.str());
}

inline AllocationConfig ExperimentPlan::point_config(std::size_t k) const {
  using namespace plan_detail;
  AllocationConfig c = base;
  CountExpr m_expr = m;
  if (sweep) {
    const std::string& key = "sweep.values";
    const std::string& v = sweep->values.at(k);
    const std::string& p = sweep->param;
    if (p == "n") c.n = parse_count(key, v);
    else if (p == "m") m_expr = parse_count_expr(key, v, false);
    else if (p == "d") c.process.d = parse_count(key, v);
    else if (p == "beta") c.process.beta = parse_real(key, v);
    else if (p == "f") c.source.f = parse_count(key, v);
    else if (p == "q") c.source.q = parse_real(key, v);
    else if (p == "D") c.dims = parse_count(key, v);
    else throw config_error("unknown sweep parameter '" + p + "'");
  }
  c.m = m_expr.resolve(c.n, 0);
  c.checkpoints.clear();
  for (const auto& e : checkpoints) c.checkpoints.push_back(e.resolve(c.n, c.m));
  std::sort(c.checkpoints.begin(), c.checkpoints.end());
  c.checkpoints.erase(std::unique(c.checkpoints.begin(), c.checkpoints.end()), c.checkpoints.end());
  c.validate();
  return c;
}

inline PotentialParams ExperimentPlan::potential_params(const AllocationConfig& config) const {
  if (!potential) throw config_error("plan has no potential.variant");
  const double load = config.source.mean_ball_load(config.dims);
  if (potential->variant != PotentialVariant::weighted_ranked)
    return default_params(potential->variant, load, potential->epsilon);
  const double lambda = potential->lambda.value_or(1.0);
  std::optional<double> S = potential->S;
  if (!S) {
    switch (config.source.variant) {
      case SourceVariant::variable_f_binomial:
        S = mgf_bound_S(config.dims, *config.source.q, lambda);
        break;
      case SourceVariant::fixed_f_uniform:
      case SourceVariant::fixed_f_nonuniform:
        S = mgf_bound_S(*config.source.f, 1.0, lambda);  // f is deterministic
        break;
      case SourceVariant::weighted_scalar:
        throw config_error("weighted-ranked potential with weighted-scalar balls needs potential.S");
    }
  }
  return default_params(potential->variant, load, potential->epsilon, S, lambda);
}

}  // namespace mdbins
