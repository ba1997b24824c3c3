// Command-line experiment runner: solve a scenario, verify it against the
// estimate checkers, or run a refinement study. Exit codes: 0 success (all
// pass-gated checks passed), 1 check failure, 2 config/schema violation,
// 3 solver failure.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

#include "parlab/scenario.hpp"

namespace {

parlab::ReportFormat parse_format(const std::string& name) {
  if (name == "csv") return parlab::ReportFormat::csv;
  if (name == "json") return parlab::ReportFormat::json;
  return parlab::ReportFormat::both;
}

std::string default_out_dir() {
  const char* env = std::getenv("PARLAB_OUT");
  return env && *env ? env : ".";
}

void print_summary(const parlab::RunResult& result) {
  for (const auto& r : result.reports) {
    std::cout << (r.passed() ? "[ ok ] " : "[FAIL] ") << r.name << " (" << r.anchor
              << "): C^ = " << r.implied_constant;
    for (const auto& [k, v] : r.exponents) std::cout << ", " << k << " = " << v;
    std::cout << " [" << parlab::to_string(r.status) << "]\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"parlab: parabolic p-Laplace / fast-diffusion estimate laboratory"};
  app.require_subcommand(1);

  std::string config_path, out_dir = default_out_dir(), format = "both";
  uint64_t seed = 42;
  int levels = 3;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "scenario config file")->required();
    cmd->add_option("--out", out_dir, "output directory (default $PARLAB_OUT or .)");
    cmd->add_option("--format", format, "report format: csv|json|both")
        ->check(CLI::IsMember({"csv", "json", "both"}));
    cmd->add_option("--seed", seed, "seed for random pair sampling in fits");
  };

  CLI::App* solve = app.add_subcommand("solve", "solve and export fields only");
  add_common(solve);
  CLI::App* verify = app.add_subcommand("verify", "solve and run the scenario's checkers");
  add_common(verify);
  CLI::App* study = app.add_subcommand("study", "rerun under (h,dt)/2^l refinement");
  add_common(study);
  study->add_option("--levels", levels, "number of refinement levels");

  CLI11_PARSE(app, argc, argv);

  try {
    parlab::Config cfg = parlab::Config::parse_file(config_path);
    parlab::RunResult result;
    if (solve->parsed()) {
      result = parlab::run_scenario(cfg, out_dir, parse_format(format), seed, true);
    } else if (verify->parsed()) {
      result = parlab::run_scenario(cfg, out_dir, parse_format(format), seed, false);
    } else {
      result = parlab::study_scenario(cfg, levels, out_dir, parse_format(format), seed);
    }
    print_summary(result);
    return result.all_passed ? 0 : 1;
  } catch (const parlab::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const parlab::SolverFailure& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
