#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "viability/generator_probe.hpp"
#include "viability/geometry.hpp"
#include "viability/mollifier.hpp"
#include "viability/sde_model.hpp"
#include "viability/theorem_checker.hpp"

namespace viability {

struct ProbeConfig {
  double eps = 0.1;
  std::size_t n_points = 200;
  double tol_shell_factor = 1.0;
  double time = 0.0;
  std::uint64_t seed = 1;
  /// Initial law for the expectation gap; a point mass at sim.x0 when absent.
  std::optional<InitialLaw> initial_cloud;
  /// Paths for the expectation-gap check; 0 disables it.
  std::size_t lemma_paths = 0;
  double lemma_t = 1.0;
  double lemma_dt = 1e-3;
};

struct SimConfig {
  Vec x0;
  double T = 1.0;
  double dt = 1e-3;
  std::size_t n_paths = 10000;
  std::uint64_t seed = 1;
  std::vector<double> dt_list;
  /// Invariance counts as observed when p_hat <= this and no path blew up.
  double observe_threshold = 1e-3;
};

struct OutputConfig {
  std::string dir = ".";
  bool plot_data = true;
};

/// Fully resolved run configuration. Every field has a default except the
/// model and domain declarations; to_json echoes all of them.
struct RunConfig {
  nlohmann::json model;
  nlohmann::json domain;
  CheckerConfig check;
  ProbeConfig probe;
  SimConfig sim;
  QuadratureConfig quad;
  OutputConfig output;
};

/// Throws ConfigError with a path-qualified message on any invalid entry.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::string& path);
nlohmann::json to_json(const RunConfig& config);

/// Applies a seed to every stochastic stage.
void override_seed(RunConfig& config, std::uint64_t seed);

SdeModel build_model(const nlohmann::json& decl);
ImplicitDomain build_domain(const nlohmann::json& decl);

}  // namespace viability
