#include "viability/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <limits>
#include <set>

#include "viability/errors.hpp"
#include "viability/generator_probe.hpp"

namespace viability {

using nlohmann::json;

Subcommand parse_subcommand(const std::string& name) {
  if (name == "check") return Subcommand::Check;
  if (name == "probe") return Subcommand::Probe;
  if (name == "simulate") return Subcommand::Simulate;
  if (name == "full") return Subcommand::Full;
  throw ConfigError("unknown subcommand '" + name + "'");
}

std::string to_string(Subcommand sub) {
  switch (sub) {
    case Subcommand::Check: return "check";
    case Subcommand::Probe: return "probe";
    case Subcommand::Simulate: return "simulate";
    case Subcommand::Full: return "full";
  }
  return "unknown";
}

std::string to_string(RunVerdict verdict) {
  switch (verdict) {
    case RunVerdict::PredictedAndObserved: return "invariance_predicted_and_observed";
    case RunVerdict::PredictedNotObserved: return "predicted_not_observed";
    case RunVerdict::NotPredictedObserved: return "not_predicted_observed";
    case RunVerdict::NotPredictedNotObserved: return "not_predicted_not_observed";
    case RunVerdict::Inconclusive: return "inconclusive";
  }
  return "unknown";
}

RunVerdict combine_verdict(std::optional<Prediction> prediction, std::optional<bool> observed) {
  if (!prediction || !observed || *prediction == Prediction::Inconclusive) return RunVerdict::Inconclusive;
  if (*prediction == Prediction::Predicted)
    return *observed ? RunVerdict::PredictedAndObserved : RunVerdict::PredictedNotObserved;
  return *observed ? RunVerdict::NotPredictedObserved : RunVerdict::NotPredictedNotObserved;
}

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

Verdict parse_verdict(const std::string& s) {
  if (s == "holds") return Verdict::Holds;
  if (s == "fails") return Verdict::Fails;
  return Verdict::Inconclusive;
}

Prediction parse_prediction(const std::string& s) {
  if (s == "predicted") return Prediction::Predicted;
  if (s == "not_predicted") return Prediction::NotPredicted;
  return Prediction::Inconclusive;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string number(const json& v) { return v.is_null() ? std::string() : number(v.get<double>()); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

}  // namespace

json to_json(const RegularityReport& r) {
  return {{"lipschitz_estimate", r.lipschitz_estimate},
          {"growth_estimate", r.growth_estimate},
          {"sample_count", r.sample_count},
          {"bound", r.bound},
          {"verdict", r.pass ? "pass" : "fail"},
          {"method", "spot-checked"}};
}

json to_json(const ConditionReport& r) {
  return {{"eps_grid", r.eps_grid},
          {"time_grid", r.time_grid},
          {"cond2_sup", r.cond2_sup},
          {"cond2_ratio", r.cond2_ratio},
          {"cond2_slope", finite_or_null(r.cond2_slope)},
          {"cond2_verdict", to_string(r.cond2_verdict)},
          {"cond3_sup", r.cond3_sup},
          {"cond3_verdict", to_string(r.cond3_verdict)},
          {"delta_abs", r.delta_abs},
          {"delta_margin", r.delta_margin},
          {"p_min", r.p_min},
          {"samples_per_eps", r.samples_per_eps},
          {"refine_steps", r.refine_steps},
          {"seed", r.seed},
          {"regularity_evaluated", r.regularity_evaluated},
          {"prediction", to_string(r.prediction)},
          {"errors", r.errors}};
}

ConditionReport condition_report_from_json(const json& c, const json& regularity) {
  ConditionReport r;
  r.eps_grid = c.at("eps_grid").get<std::vector<double>>();
  r.time_grid = c.at("time_grid").get<std::vector<double>>();
  r.cond2_sup = c.at("cond2_sup").get<std::vector<double>>();
  r.cond2_ratio = c.at("cond2_ratio").get<std::vector<double>>();
  r.cond2_slope = c.at("cond2_slope").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                                : c.at("cond2_slope").get<double>();
  r.cond2_verdict = parse_verdict(c.at("cond2_verdict").get<std::string>());
  r.cond3_sup = c.at("cond3_sup").get<std::vector<double>>();
  r.cond3_verdict = parse_verdict(c.at("cond3_verdict").get<std::string>());
  r.delta_abs = c.at("delta_abs").get<double>();
  r.delta_margin = c.at("delta_margin").get<double>();
  r.p_min = c.at("p_min").get<double>();
  r.samples_per_eps = c.at("samples_per_eps").get<std::size_t>();
  r.refine_steps = c.at("refine_steps").get<int>();
  r.seed = c.at("seed").get<std::uint64_t>();
  r.regularity_evaluated = c.at("regularity_evaluated").get<bool>();
  r.prediction = parse_prediction(c.at("prediction").get<std::string>());
  r.errors = c.at("errors").get<std::vector<std::string>>();
  if (!regularity.is_null()) {
    r.regularity.lipschitz_estimate = regularity.at("lipschitz_estimate").get<double>();
    r.regularity.growth_estimate = regularity.at("growth_estimate").get<double>();
    r.regularity.sample_count = regularity.at("sample_count").get<std::size_t>();
    r.regularity.bound = regularity.at("bound").get<double>();
    r.regularity.pass = regularity.at("verdict").get<std::string>() == "pass";
  }
  return r;
}

json to_json(const ExitEstimate& e) {
  return {{"n_paths", e.n_paths}, {"n_exits", e.n_exits}, {"n_nonfinite", e.n_nonfinite},
          {"p_hat", e.p_hat},     {"ci_low", e.ci_low},   {"ci_high", e.ci_high},
          {"dt", e.dt},           {"T", e.T},             {"seed", e.seed}};
}

json to_json(const ShellProbeResult& r) {
  json points = json::array();
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    points.push_back({{"x", std::vector<double>(r.points[i].data(), r.points[i].data() + r.points[i].size())},
                      {"distance", r.distances[i]},
                      {"region", to_string(r.regions[i])},
                      {"value", r.values[i]}});
  }
  return {{"eps", r.eps},
          {"time", r.time},
          {"min_value", r.min_value},
          {"tolerance_used", r.tolerance_used},
          {"pass", r.pass},
          {"points", points}};
}

RunResult run(const RunConfig& config, Subcommand subcommand, ExecPolicy exec) {
  const SdeModel model = build_model(config.model);
  const ImplicitDomain domain = build_domain(config.domain);

  json report{{"schema", kReportSchema},
              {"tool", {{"name", "viability"}, {"version", kToolVersion}}},
              {"generated_at", utc_timestamp()},
              {"subcommand", to_string(subcommand)},
              {"config", to_json(config)},
              {"regularity", nullptr},
              {"conditions", nullptr},
              {"shell_probe", nullptr},
              {"lemma1", nullptr},
              {"exit", nullptr},
              {"dt_study", nullptr}};

  std::optional<Prediction> prediction;
  std::optional<bool> observed;
  bool probe_pass = true;

  const bool do_check = subcommand == Subcommand::Check || subcommand == Subcommand::Full;
  const bool do_probe = subcommand == Subcommand::Probe || subcommand == Subcommand::Full;
  const bool do_sim = subcommand == Subcommand::Simulate || subcommand == Subcommand::Full;

  if (do_check) {
    CheckerConfig checker = config.check;
    checker.exec = exec;
    const ConditionReport conditions = theorem1_report(model, domain, checker);
    if (conditions.regularity_evaluated) report["regularity"] = to_json(conditions.regularity);
    report["conditions"] = to_json(conditions);
    prediction = conditions.prediction;
  }

  if (do_probe) {
    const SmoothedIndicator indicator(domain, config.probe.eps, config.quad);
    const ShellProbeResult shell = shell_sign_check(model, indicator, config.probe.time, config.probe.n_points,
                                                    config.probe.seed, std::nullopt, config.probe.tol_shell_factor, exec);
    report["shell_probe"] = to_json(shell);
    probe_pass = shell.pass;
    if (config.probe.lemma_paths > 0) {
      const InitialLaw law = config.probe.initial_cloud.value_or(InitialLaw{config.sim.x0, 0.0});
      const GapEstimate gap = lemma1_gap(model, indicator, law, config.probe.lemma_t, config.probe.lemma_dt,
                                         config.probe.lemma_paths, config.probe.seed, exec);
      const bool ok = gap.gap >= -3.0 * gap.std_error;
      report["lemma1"] = {{"gap", gap.gap},
                          {"std_error", gap.std_error},
                          {"n_paths", gap.n_paths},
                          {"t_final", config.probe.lemma_t},
                          {"dt", config.probe.lemma_dt},
                          {"pass", ok}};
      probe_pass = probe_pass && ok;
    }
  }

  if (do_sim) {
    const auto& s = config.sim;
    const ExitEstimate est = exit_probability(model, domain, s.x0, s.T, s.dt, s.n_paths, s.seed, exec);
    report["exit"] = to_json(est);
    observed = est.n_nonfinite == 0 && est.p_hat <= s.observe_threshold;
    if (!s.dt_list.empty()) {
      json rows = json::array();
      for (const auto& e : dt_convergence_study(model, domain, s.x0, s.T, s.dt_list, s.n_paths, s.seed, exec))
        rows.push_back(to_json(e));
      report["dt_study"] = rows;
    }
  }

  const RunVerdict verdict = combine_verdict(prediction, observed);
  int code = exit_code::kPass;
  switch (subcommand) {
    case Subcommand::Check:
      code = *prediction == Prediction::Predicted      ? exit_code::kPass
             : *prediction == Prediction::NotPredicted ? exit_code::kFailure
                                                       : exit_code::kInconclusive;
      break;
    case Subcommand::Probe: code = probe_pass ? exit_code::kPass : exit_code::kFailure; break;
    case Subcommand::Simulate: code = *observed ? exit_code::kPass : exit_code::kFailure; break;
    case Subcommand::Full:
      code = verdict == RunVerdict::PredictedAndObserved ? exit_code::kPass
             : verdict == RunVerdict::Inconclusive       ? exit_code::kInconclusive
                                                         : exit_code::kFailure;
      break;
  }

  report["prediction"] = prediction ? json(to_string(*prediction)) : json(nullptr);
  report["observation"] = observed ? json(*observed ? "invariant" : "exits") : json(nullptr);
  report["verdict"] = to_string(verdict);
  report["exit_code"] = code;
  return {report, code};
}

Manifest emit_plot_data(const json& report, const std::filesystem::path& dir) {
  Manifest manifest;
  const json& cond = report.value("conditions", json(nullptr));
  if (!cond.is_null() && !cond.at("cond2_sup").empty()) {
    std::string csv = "log_eps,log_cond2_sup\n";
    const auto& eps = cond.at("eps_grid");
    const auto& sup = cond.at("cond2_sup");
    for (std::size_t i = 0; i < sup.size(); ++i) {
      const double s = sup[i].get<double>();
      csv += number(std::log(eps[i].get<double>())) + "," + (s > 0.0 ? number(std::log(s)) : std::string()) + "\n";
    }
    write_text(dir / "plot_cond2.csv", csv);
    manifest.written.push_back("plot_cond2.csv");
  } else {
    manifest.omitted.emplace_back("plot_cond2.csv", "no condition profile in report");
  }

  const json& shell = report.value("shell_probe", json(nullptr));
  if (!shell.is_null()) {
    std::string csv = "distance,A_eta\n";
    for (const auto& p : shell.at("points")) csv += number(p.at("distance")) + "," + number(p.at("value")) + "\n";
    write_text(dir / "plot_shell.csv", csv);
    manifest.written.push_back("plot_shell.csv");
  } else {
    manifest.omitted.emplace_back("plot_shell.csv", "no shell probe in report");
  }
  return manifest;
}

Manifest write_outputs(const json& report, const std::filesystem::path& dir, bool plot_data) {
  std::filesystem::create_directories(dir);
  Manifest manifest;
  write_text(dir / "report.json", report.dump(2) + "\n");
  manifest.written.push_back("report.json");

  const json& cond = report.value("conditions", json(nullptr));
  if (!cond.is_null()) {
    std::string csv = "eps,cond2_sup,cond2_ratio,cond3_sup\n";
    const auto& eps = cond.at("eps_grid");
    for (std::size_t i = 0; i < eps.size(); ++i) {
      auto at = [&](const char* key) {
        const auto& arr = cond.at(key);
        return i < arr.size() ? number(arr[i]) : std::string();
      };
      csv += number(eps[i]) + "," + at("cond2_sup") + "," + at("cond2_ratio") + "," + at("cond3_sup") + "\n";
    }
    write_text(dir / "cond_profile.csv", csv);
    manifest.written.push_back("cond_profile.csv");
  } else {
    manifest.omitted.emplace_back("cond_profile.csv", "no condition check in this run");
  }

  const json& exit = report.value("exit", json(nullptr));
  if (!exit.is_null()) {
    std::string csv = "dt,n_paths,p_hat,ci_low,ci_high\n";
    auto row = [&](const json& e) {
      csv += number(e.at("dt")) + "," + std::to_string(e.at("n_paths").get<std::size_t>()) + "," + number(e.at("p_hat")) +
             "," + number(e.at("ci_low")) + "," + number(e.at("ci_high")) + "\n";
    };
    row(exit);
    const json& study = report.value("dt_study", json(nullptr));
    if (!study.is_null())
      for (const auto& e : study) row(e);
    write_text(dir / "exit.csv", csv);
    manifest.written.push_back("exit.csv");
  } else {
    manifest.omitted.emplace_back("exit.csv", "no simulation in this run");
  }

  if (plot_data) {
    const Manifest plots = emit_plot_data(report, dir);
    manifest.written.insert(manifest.written.end(), plots.written.begin(), plots.written.end());
    manifest.omitted.insert(manifest.omitted.end(), plots.omitted.begin(), plots.omitted.end());
  } else {
    manifest.omitted.emplace_back("plot_*.csv", "plot data disabled");
  }

  json omitted = json::object();
  for (const auto& [file, reason] : manifest.omitted) omitted[file] = reason;
  manifest.written.push_back("manifest.json");
  write_text(dir / "manifest.json", json{{"written", manifest.written}, {"omitted", omitted}}.dump(2) + "\n");
  return manifest;
}

std::vector<std::string> validate_report(const json& r) {
  std::vector<std::string> problems;
  auto need = [&](const json& obj, const std::string& path, const char* key, auto predicate, const char* what) {
    if (!obj.is_object() || !obj.contains(key)) {
      problems.push_back(path + "." + key + ": missing");
      return false;
    }
    if (!predicate(obj.at(key))) {
      problems.push_back(path + "." + key + ": expected " + what);
      return false;
    }
    return true;
  };
  const auto is_string = [](const json& v) { return v.is_string(); };
  const auto is_object = [](const json& v) { return v.is_object(); };
  const auto is_number = [](const json& v) { return v.is_number(); };
  const auto is_bool = [](const json& v) { return v.is_boolean(); };
  const auto is_array = [](const json& v) { return v.is_array(); };
  const auto nullable_object = [](const json& v) { return v.is_null() || v.is_object(); };
  auto one_of = [](std::set<std::string> values, bool nullable) {
    return [values = std::move(values), nullable](const json& v) {
      return (nullable && v.is_null()) || (v.is_string() && values.count(v.get<std::string>()) > 0);
    };
  };

  if (!r.is_object()) return {"report: expected an object"};
  if (need(r, "report", "schema", is_string, "string") && r.at("schema") != kReportSchema)
    problems.push_back("report.schema: unexpected value");
  if (need(r, "report", "tool", is_object, "object")) {
    need(r.at("tool"), "report.tool", "name", is_string, "string");
    need(r.at("tool"), "report.tool", "version", is_string, "string");
  }
  need(r, "report", "generated_at", is_string, "string");
  need(r, "report", "subcommand", one_of({"check", "probe", "simulate", "full"}, false), "subcommand");
  if (need(r, "report", "config", is_object, "object"))
    for (const char* key : {"model", "domain", "check", "probe", "sim", "quad", "output"})
      need(r.at("config"), "report.config", key, is_object, "object");
  need(r, "report", "verdict",
       one_of({"invariance_predicted_and_observed", "predicted_not_observed", "not_predicted_observed",
               "not_predicted_not_observed", "inconclusive"},
              false),
       "verdict");
  need(r, "report", "prediction", one_of({"predicted", "not_predicted", "inconclusive"}, true), "prediction or null");
  need(r, "report", "observation", one_of({"invariant", "exits"}, true), "observation or null");
  need(r, "report", "exit_code", [](const json& v) { return v.is_number_integer() && v >= 0 && v <= 2; },
       "integer in [0, 2]");

  if (need(r, "report", "regularity", nullable_object, "object or null") && !r.at("regularity").is_null()) {
    const json& g = r.at("regularity");
    for (const char* key : {"lipschitz_estimate", "growth_estimate", "sample_count", "bound"})
      if (need(g, "report.regularity", key, is_number, "number") && g.at(key).get<double>() < 0.0)
        problems.push_back(std::string("report.regularity.") + key + ": negative");
    need(g, "report.regularity", "verdict", one_of({"pass", "fail"}, false), "pass/fail");
  }
  if (need(r, "report", "conditions", nullable_object, "object or null") && !r.at("conditions").is_null()) {
    const json& c = r.at("conditions");
    const std::string p = "report.conditions";
    for (const char* key : {"eps_grid", "time_grid", "cond2_sup", "cond2_ratio", "cond3_sup", "errors"})
      need(c, p, key, is_array, "array");
    for (const char* key : {"delta_abs", "delta_margin", "p_min", "samples_per_eps", "refine_steps", "seed"})
      need(c, p, key, is_number, "number");
    need(c, p, "cond2_slope", [](const json& v) { return v.is_null() || v.is_number(); }, "number or null");
    need(c, p, "cond2_verdict", one_of({"holds", "fails", "inconclusive"}, false), "verdict");
    need(c, p, "cond3_verdict", one_of({"holds", "fails", "inconclusive"}, false), "verdict");
    need(c, p, "prediction", one_of({"predicted", "not_predicted", "inconclusive"}, false), "prediction");
    need(c, p, "regularity_evaluated", is_bool, "boolean");
    if (c.contains("eps_grid") && c.at("eps_grid").is_array()) {
      const auto& eps = c.at("eps_grid");
      for (std::size_t i = 1; i < eps.size(); ++i)
        if (!(eps[i].get<double>() < eps[i - 1].get<double>())) problems.push_back(p + ".eps_grid: not decreasing");
      for (const char* key : {"cond2_sup", "cond2_ratio", "cond3_sup"})
        if (c.contains(key) && c.at(key).is_array() && !c.at(key).empty() && c.at(key).size() != eps.size())
          problems.push_back(p + "." + key + ": length differs from eps_grid");
    }
  }
  if (need(r, "report", "shell_probe", nullable_object, "object or null") && !r.at("shell_probe").is_null()) {
    const json& s = r.at("shell_probe");
    for (const char* key : {"eps", "time", "min_value", "tolerance_used"})
      need(s, "report.shell_probe", key, is_number, "number");
    need(s, "report.shell_probe", "pass", is_bool, "boolean");
    if (need(s, "report.shell_probe", "points", is_array, "array"))
      for (const auto& pt : s.at("points"))
        if (!pt.is_object() || pt.value("region", "") != "in_shell_K3eps")
          problems.push_back("report.shell_probe.points: point outside the shell");
  }
  need(r, "report", "lemma1", nullable_object, "object or null");
  auto check_exit = [&](const json& e, const std::string& p) {
    for (const char* key : {"n_paths", "n_exits", "n_nonfinite", "p_hat", "ci_low", "ci_high", "dt", "T", "seed"})
      need(e, p, key, is_number, "number");
    if (problems.empty()) {
      const double lo = e.at("ci_low"), ph = e.at("p_hat"), hi = e.at("ci_high");
      if (!(0.0 <= lo && lo <= ph && ph <= hi && hi <= 1.0)) problems.push_back(p + ": interval ordering violated");
    }
  };
  if (need(r, "report", "exit", nullable_object, "object or null") && !r.at("exit").is_null())
    check_exit(r.at("exit"), "report.exit");
  if (need(r, "report", "dt_study", [](const json& v) { return v.is_null() || v.is_array(); }, "array or null") &&
      !r.at("dt_study").is_null())
    for (const auto& e : r.at("dt_study")) check_exit(e, "report.dt_study[]");
  return problems;
}

json strip_volatile(json report) {
  report.erase("generated_at");
  return report;
}

}  // namespace viability
