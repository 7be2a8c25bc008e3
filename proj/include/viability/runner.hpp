#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "viability/mc_simulator.hpp"
#include "viability/parallel.hpp"
#include "viability/run_config.hpp"
#include "viability/theorem_checker.hpp"

namespace viability {

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr const char* kReportSchema = "viability-report/1";

enum class Subcommand { Check, Probe, Simulate, Full };
Subcommand parse_subcommand(const std::string& name);
std::string to_string(Subcommand sub);

/// Theory prediction crossed with Monte Carlo observation.
enum class RunVerdict {
  PredictedAndObserved,
  PredictedNotObserved,
  NotPredictedObserved,
  NotPredictedNotObserved,
  Inconclusive,
};
std::string to_string(RunVerdict verdict);

/// Inconclusive whenever either side is missing or undecided.
RunVerdict combine_verdict(std::optional<Prediction> prediction, std::optional<bool> invariance_observed);

namespace exit_code {
inline constexpr int kPass = 0;
inline constexpr int kFailure = 1;
inline constexpr int kInconclusive = 2;
inline constexpr int kConfigError = 3;
inline constexpr int kNumericalError = 4;
inline constexpr int kRuntimeError = 5;
}  // namespace exit_code

struct RunResult {
  nlohmann::json report;
  int exit_code = exit_code::kPass;
};

/// Executes a pipeline; the report carries the resolved config echo and every
/// sub-report. Numerical errors propagate to the caller.
RunResult run(const RunConfig& config, Subcommand subcommand, ExecPolicy exec = {});

nlohmann::json to_json(const ConditionReport& report);
nlohmann::json to_json(const RegularityReport& report);
nlohmann::json to_json(const ExitEstimate& estimate);
nlohmann::json to_json(const ShellProbeResult& result);

struct Manifest {
  std::vector<std::string> written;
  std::vector<std::pair<std::string, std::string>> omitted;  // file, reason
};

/// Plot-ready CSVs: plot_cond2.csv (log eps vs log sup) and plot_shell.csv
/// (distance vs A eta). log(0) is written as an empty cell.
Manifest emit_plot_data(const nlohmann::json& report, const std::filesystem::path& dir);

/// report.json, cond_profile.csv, exit.csv, plot data (when enabled) and manifest.json.
Manifest write_outputs(const nlohmann::json& report, const std::filesystem::path& dir, bool plot_data);

/// Structural check against docs/report.schema.json; returns the problems found.
std::vector<std::string> validate_report(const nlohmann::json& report);

/// Report without volatile fields (timestamp), for reproducibility comparisons.
nlohmann::json strip_volatile(nlohmann::json report);

}  // namespace viability

namespace viability {

/// Inverse of to_json(ConditionReport) for stored reports; verdict fields are read as stored.
ConditionReport condition_report_from_json(const nlohmann::json& conditions, const nlohmann::json& regularity);

}  // namespace viability
