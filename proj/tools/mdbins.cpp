// mdbins: run balls-into-bins experiment plans.
//
//   mdbins run <plan>
//   mdbins drift <plan> --at <t> --samples <k>
//   mdbins oracle-check <plan> --trials <N>
//   mdbins bounds <plan> [--zeta <z>]
//
// Exit codes: 0 success, 1 validation error, 2 failed check, 3 I/O error.

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "mdbins/mdbins.hpp"

namespace {

enum Exit { kOk = 0, kInvalid = 1, kCheckFailed = 2, kIo = 3 };

int cmd_run(const std::string& path) {
  const auto plan = mdbins::load_plan(path);
  const auto result = mdbins::run_plan(plan);
  std::cout << mdbins::summary_json(plan, result).dump(2) << "\n";
  return kOk;
}

int cmd_drift(const std::string& path, std::uint64_t at, std::size_t samples) {
  const auto plan = mdbins::load_plan(path);
  std::cout << mdbins::drift_command(plan, at, samples).dump(2) << "\n";
  return kOk;
}

int cmd_oracle(const std::string& path, std::size_t trials) {
  const auto plan = mdbins::load_plan(path);
  const auto results = mdbins::oracle_check(plan, trials);
  bool ok = true;
  for (const auto& r : results) {
    std::cout << "point " << r.point << ": ";
    if (r.forbidden) {
      std::cout << "FAIL " << r.diagnostic << "\n";
    } else {
      std::cout << (r.passed() ? "PASS" : "FAIL") << " chi2=" << r.chi.statistic
                << " dof=" << r.chi.dof << " p=" << r.chi.p_value
                << " E[gap]=" << r.expected_gap << "\n";
    }
    ok = ok && r.passed();
  }
  return ok ? kOk : kCheckFailed;
}

int cmd_bounds(const std::string& path, double zeta) {
  const auto plan = mdbins::load_plan(path);
  std::cout << mdbins::bounds_command(plan, zeta).dump(2) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multidimensional balls-into-bins simulator"};
  app.require_subcommand(1);

  std::string plan_path;
  std::uint64_t at = 0;
  std::size_t samples = 1000;
  std::size_t trials = 100000;
  double zeta = 0.1;

  auto* run = app.add_subcommand("run", "Execute a plan; writes <output>.csv and <output>.summary.json");
  run->add_option("plan", plan_path, "Plan file")->required();

  auto* drift = app.add_subcommand("drift", "One-step potential drift at ball count t");
  drift->add_option("plan", plan_path, "Plan file")->required();
  drift->add_option("--at", at, "Ball count at which to freeze")->required();
  drift->add_option("--samples", samples, "Monte Carlo continuations (>= 100)");

  auto* oracle = app.add_subcommand("oracle-check", "Compare simulation with exact enumeration");
  oracle->add_option("plan", plan_path, "Plan file")->required();
  oracle->add_option("--trials", trials, "Simulated trials");

  auto* bounds = app.add_subcommand("bounds", "Bound curves beside observed median gaps");
  bounds->add_option("plan", plan_path, "Plan file")->required();
  bounds->add_option("--zeta", zeta, "Exponent slack of the w.h.p. curve");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    if (*run) return cmd_run(plan_path);
    if (*drift) return cmd_drift(plan_path, at, samples);
    if (*oracle) return cmd_oracle(plan_path, trials);
    if (*bounds) return cmd_bounds(plan_path, zeta);
  } catch (const mdbins::config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const mdbins::io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kCheckFailed;
  }
  return kInvalid;
}
