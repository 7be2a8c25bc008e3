#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "viability/geometry.hpp"
#include "viability/parallel.hpp"
#include "viability/sde_model.hpp"

namespace viability {

enum class Verdict { Holds, Fails, Inconclusive };
std::string to_string(Verdict verdict);

enum class Prediction { Predicted, NotPredicted, Inconclusive };
std::string to_string(Prediction prediction);

struct CheckerConfig {
  std::vector<double> eps_grid{0.2, 0.1, 0.05, 0.025};
  std::vector<double> time_grid{0.0};
  std::size_t samples_per_eps = 2000;
  std::uint64_t seed = 1;
  double delta_abs = 1e-2;
  double delta_margin = 1e-3;
  double p_min = 1.5;
  /// Refinement: local ascent steps applied to each running-record sample.
  int refine_steps = 20;
  /// Condition 1 surrogate: Lipschitz/growth spot check.
  double lipschitz_bound = 10.0;
  std::size_t regularity_pairs = 1000;
  ExecPolicy exec{};
};

/// max over noise channels j and grid times s of |b_j(s, z) . nu(z)|.
double condition2_value(const SdeModel& model, const std::vector<double>& time_grid, const BoundarySample& sample);

/// a(s, z) . nu(z) - 1/2 sum_{i,j,k} d b_ki / d z_j (s, z) nu_i(z) b_kj(s, z).
double condition3_value(const SdeModel& model, double s, const BoundarySample& sample);

/// Per-eps sup of condition2_value over S_eps samples (plus local refinement).
std::vector<double> condition2_profile(const SdeModel& model, const ImplicitDomain& domain,
                                       const std::vector<double>& eps_grid, const std::vector<double>& time_grid,
                                       std::size_t samples_per_eps, std::uint64_t seed, int refine_steps = 20,
                                       ExecPolicy exec = {});

/// Per-eps sup over samples and grid times of condition3_value (plus local refinement).
std::vector<double> condition3_profile(const SdeModel& model, const ImplicitDomain& domain,
                                       const std::vector<double>& eps_grid, const std::vector<double>& time_grid,
                                       std::size_t samples_per_eps, std::uint64_t seed, int refine_steps = 20,
                                       ExecPolicy exec = {});

/// Least-squares slope of log(sup) against log(eps); NaN if any sup <= 0.
double log_log_slope(const std::vector<double>& eps_grid, const std::vector<double>& profile);

/// Finite decision rule for sup |b_j . nu| = o(eps):
///  holds if every sup <= delta_abs, or the log-log slope is >= p_min and
///  sup/eps at the smallest eps is <= delta_abs; fails if every sup/eps is
///  >= delta_abs and sup/eps is non-decreasing as eps shrinks; else inconclusive.
Verdict condition2_verdict(const std::vector<double>& eps_grid, const std::vector<double>& profile, double delta_abs,
                           double p_min);

/// holds if the sups at the two smallest eps are <= -delta_margin;
/// fails if the smallest-eps sup is >= +delta_margin; else inconclusive.
Verdict condition3_verdict(const std::vector<double>& profile, double delta_margin);

struct ConditionReport {
  std::vector<double> eps_grid;
  std::vector<double> time_grid;
  std::vector<double> cond2_sup;
  std::vector<double> cond2_ratio;
  double cond2_slope = 0.0;  // NaN when undefined
  Verdict cond2_verdict = Verdict::Inconclusive;
  std::vector<double> cond3_sup;
  Verdict cond3_verdict = Verdict::Inconclusive;
  double delta_abs = 0.0;
  double delta_margin = 0.0;
  double p_min = 0.0;
  std::size_t samples_per_eps = 0;
  int refine_steps = 0;
  std::uint64_t seed = 0;
  RegularityReport regularity;
  bool regularity_evaluated = false;
  Prediction prediction = Prediction::Inconclusive;
  std::vector<std::string> errors;
};

/// Combines the regularity spot check with conditions 2 and 3. Invariance is
/// predicted only when all three hold; a module error is recorded in `errors`
/// and the remaining checks still run.
ConditionReport theorem1_report(const SdeModel& model, const ImplicitDomain& domain, const CheckerConfig& config);

/// Recomputes verdicts and prediction from the stored profiles and parameters.
void rederive_verdicts(ConditionReport& report);

}  // namespace viability
