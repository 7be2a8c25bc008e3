// viability <check|probe|simulate|full> --config <path> [--out <dir>] [--seed <u64>] [--threads <k>]

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "viability/errors.hpp"
#include "viability/run_config.hpp"
#include "viability/runner.hpp"

int main(int argc, char** argv) {
  using namespace viability;

  CLI::App app{"Numerical invariance checks for Ito SDEs on smooth domains"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;

  for (const char* name : {"check", "probe", "simulate", "full"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "Run configuration (JSON)")->required();
    sub->add_option("--out", out_dir, "Output directory (default: output.dir from the config)");
    sub->add_option("--seed", seed, "Seed applied to every stochastic stage");
    sub->add_option("--threads", threads, "Worker threads (0 = hardware concurrency)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_code::kConfigError;
  }

  try {
    const std::string sub_name = app.get_subcommands().front()->get_name();
    RunConfig config = load_config(config_path);
    if (seed) override_seed(config, *seed);
    const RunResult result = run(config, parse_subcommand(sub_name), ExecPolicy{threads});
    for (const auto& problem : validate_report(result.report)) std::cerr << "report schema: " << problem << '\n';
    const std::string dir = out_dir.value_or(config.output.dir);
    const Manifest manifest = write_outputs(result.report, dir, config.output.plot_data);
    std::cout << "verdict: " << result.report.at("verdict").get<std::string>() << '\n';
    for (const auto& file : manifest.written) std::cout << "wrote " << dir << '/' << file << '\n';
    return result.exit_code;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return exit_code::kConfigError;
  } catch (const NoConvergence& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return exit_code::kNumericalError;
  } catch (const ToleranceNotMet& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return exit_code::kNumericalError;
  } catch (const NonFinite& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return exit_code::kNumericalError;
  } catch (const DegenerateGradient& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return exit_code::kNumericalError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code::kRuntimeError;
  }
}
