#include "viability/theorem_checker.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "viability/rng.hpp"

namespace viability {

std::string to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::Holds: return "holds";
    case Verdict::Fails: return "fails";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "unknown";
}

std::string to_string(Prediction prediction) {
  switch (prediction) {
    case Prediction::Predicted: return "predicted";
    case Prediction::NotPredicted: return "not_predicted";
    case Prediction::Inconclusive: return "inconclusive";
  }
  return "unknown";
}

double condition2_value(const SdeModel& model, const std::vector<double>& time_grid, const BoundarySample& sample) {
  double best = 0.0;
  for (const double s : time_grid) {
    const Vec projections = model.diffusion(s, sample.point) * sample.normal;  // row j: b_j . nu
    best = std::max(best, projections.cwiseAbs().maxCoeff());
  }
  return best;
}

double condition3_value(const SdeModel& model, double s, const BoundarySample& sample) {
  const Vec& nu = sample.normal;
  const double drift_term = model.drift(s, sample.point).dot(nu);
  const Mat b = model.diffusion(s, sample.point);
  const auto jac = model.diffusion_jacobian(s, sample.point);
  double correction = 0.0;
  for (int k = 0; k < model.dimension(); ++k) correction += nu.dot(jac[k] * b.row(k).transpose());
  return drift_term - 0.5 * correction;
}

namespace {

void validate_grids(const std::vector<double>& eps_grid, const std::vector<double>& time_grid) {
  if (eps_grid.size() < 3) throw std::invalid_argument("eps_grid needs at least 3 entries");
  for (std::size_t i = 0; i < eps_grid.size(); ++i) {
    if (!(eps_grid[i] > 0.0)) throw std::invalid_argument("eps_grid entries must be positive");
    if (i > 0 && !(eps_grid[i] < eps_grid[i - 1])) throw std::invalid_argument("eps_grid must be strictly decreasing");
  }
  if (time_grid.empty()) throw std::invalid_argument("time_grid must not be empty");
}

BoundarySample offset_sample(const ImplicitDomain& domain, const Vec& foot, double eps) {
  Vec normal = domain.outward_normal(foot);
  Vec point = foot + eps * normal;
  return {std::move(point), std::move(normal), eps, foot};
}

// Stochastic ascent along the boundary: tangent perturbation of the foot,
// reprojection, keep improvements, adapt the step.
double refine(const ImplicitDomain& domain, const BoundarySample& start, double start_value, double eps, int steps,
              std::uint64_t seed, const std::function<double(const BoundarySample&)>& value) {
  RandomStream rng(seed);
  const int n = domain.dimension();
  Vec foot = start.foot;
  Vec normal = start.normal;
  double best = start_value;
  double step = 0.05 * domain.characteristic_length();
  for (int k = 0; k < steps; ++k) {
    Vec d(n);
    for (int i = 0; i < n; ++i) d(i) = rng.normal();
    d -= d.dot(normal) * normal;
    const double norm = d.norm();
    if (!(norm > 1e-12)) continue;
    const Vec trial_foot = domain.project_to_boundary(foot + step * d / norm).foot;
    const BoundarySample trial = offset_sample(domain, trial_foot, eps);
    const double v = value(trial);
    if (v > best) {
      best = v;
      foot = trial.foot;
      normal = trial.normal;
      step *= 1.5;
    } else {
      step *= 0.5;
    }
  }
  return best;
}

std::vector<double> sup_profile(const ImplicitDomain& domain, const std::vector<double>& eps_grid,
                                std::size_t samples_per_eps, std::uint64_t seed, int refine_steps, ExecPolicy exec,
                                const std::function<double(const BoundarySample&)>& value) {
  if (samples_per_eps < 1) throw std::invalid_argument("samples_per_eps must be >= 1");
  std::vector<double> profile;
  profile.reserve(eps_grid.size());
  for (std::size_t e = 0; e < eps_grid.size(); ++e) {
    const double eps = eps_grid[e];
    const std::uint64_t eps_seed = derive_seed(seed, e);
    const auto samples = domain.sample_offset_boundary(eps, samples_per_eps, eps_seed);
    std::vector<double> values(samples.size());
    parallel_for(samples.size(), exec, [&](std::size_t i) { values[i] = value(samples[i]); });

    // Refine every running record. Record status depends only on the sample
    // prefix, so adding samples can only add refinements.
    std::vector<std::size_t> records;
    double running = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (values[i] > running) {
        running = values[i];
        records.push_back(i);
      }
    }
    double sup = running;
    if (refine_steps > 0) {
      std::vector<double> refined(records.size());
      parallel_for(records.size(), exec, [&](std::size_t r) {
        const std::size_t i = records[r];
        refined[r] = refine(domain, samples[i], values[i], eps, refine_steps, derive_seed(eps_seed, i + 1), value);
      });
      for (const double v : refined) sup = std::max(sup, v);
    }
    profile.push_back(sup);
  }
  return profile;
}

}  // namespace

std::vector<double> condition2_profile(const SdeModel& model, const ImplicitDomain& domain,
                                       const std::vector<double>& eps_grid, const std::vector<double>& time_grid,
                                       std::size_t samples_per_eps, std::uint64_t seed, int refine_steps,
                                       ExecPolicy exec) {
  validate_grids(eps_grid, time_grid);
  return sup_profile(domain, eps_grid, samples_per_eps, seed, refine_steps, exec,
                     [&](const BoundarySample& s) { return condition2_value(model, time_grid, s); });
}

std::vector<double> condition3_profile(const SdeModel& model, const ImplicitDomain& domain,
                                       const std::vector<double>& eps_grid, const std::vector<double>& time_grid,
                                       std::size_t samples_per_eps, std::uint64_t seed, int refine_steps,
                                       ExecPolicy exec) {
  validate_grids(eps_grid, time_grid);
  return sup_profile(domain, eps_grid, samples_per_eps, seed, refine_steps, exec, [&](const BoundarySample& s) {
    double best = -std::numeric_limits<double>::infinity();
    for (const double t : time_grid) best = std::max(best, condition3_value(model, t, s));
    return best;
  });
}

double log_log_slope(const std::vector<double>& eps_grid, const std::vector<double>& profile) {
  if (eps_grid.size() != profile.size() || eps_grid.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const auto m = static_cast<double>(eps_grid.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < eps_grid.size(); ++i) {
    if (!(profile[i] > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    const double lx = std::log(eps_grid[i]);
    const double ly = std::log(profile[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = m * sxx - sx * sx;
  if (!(std::abs(denom) > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return (m * sxy - sx * sy) / denom;
}

Verdict condition2_verdict(const std::vector<double>& eps_grid, const std::vector<double>& profile, double delta_abs,
                           double p_min) {
  if (eps_grid.size() != profile.size()) throw std::invalid_argument("profile and eps_grid differ in length");
  if (profile.size() < 3) throw std::invalid_argument("condition 2 verdict needs at least 3 eps values");

  if (std::all_of(profile.begin(), profile.end(), [&](double v) { return v <= delta_abs; })) return Verdict::Holds;

  std::vector<double> ratio(profile.size());
  for (std::size_t i = 0; i < profile.size(); ++i) ratio[i] = profile[i] / eps_grid[i];

  const double slope = log_log_slope(eps_grid, profile);
  if (std::isfinite(slope) && slope >= p_min && ratio.back() <= delta_abs) return Verdict::Holds;

  const bool bounded_below = std::all_of(ratio.begin(), ratio.end(), [&](double r) { return r >= delta_abs; });
  const bool non_decreasing = std::is_sorted(ratio.begin(), ratio.end());
  if (bounded_below && non_decreasing) return Verdict::Fails;
  return Verdict::Inconclusive;
}

Verdict condition3_verdict(const std::vector<double>& profile, double delta_margin) {
  if (profile.size() < 2) throw std::invalid_argument("condition 3 verdict needs at least 2 eps values");
  const double last = profile[profile.size() - 1];
  const double second = profile[profile.size() - 2];
  if (last <= -delta_margin && second <= -delta_margin) return Verdict::Holds;
  if (last >= delta_margin) return Verdict::Fails;
  return Verdict::Inconclusive;
}

void rederive_verdicts(ConditionReport& report) {
  report.cond2_ratio.assign(report.cond2_sup.size(), 0.0);
  for (std::size_t i = 0; i < report.cond2_sup.size() && i < report.eps_grid.size(); ++i)
    report.cond2_ratio[i] = report.cond2_sup[i] / report.eps_grid[i];
  report.cond2_slope = log_log_slope(report.eps_grid, report.cond2_sup);

  const bool have2 = report.cond2_sup.size() == report.eps_grid.size() && report.eps_grid.size() >= 3;
  const bool have3 = report.cond3_sup.size() == report.eps_grid.size() && report.eps_grid.size() >= 2;
  report.cond2_verdict =
      have2 ? condition2_verdict(report.eps_grid, report.cond2_sup, report.delta_abs, report.p_min) : Verdict::Inconclusive;
  report.cond3_verdict = have3 ? condition3_verdict(report.cond3_sup, report.delta_margin) : Verdict::Inconclusive;

  const bool regularity_ok = report.regularity_evaluated && report.regularity.pass;
  const bool regularity_failed = report.regularity_evaluated && !report.regularity.pass;
  if (report.cond2_verdict == Verdict::Holds && report.cond3_verdict == Verdict::Holds && regularity_ok)
    report.prediction = Prediction::Predicted;
  else if (report.cond2_verdict == Verdict::Fails || report.cond3_verdict == Verdict::Fails || regularity_failed)
    report.prediction = Prediction::NotPredicted;
  else
    report.prediction = Prediction::Inconclusive;
}

ConditionReport theorem1_report(const SdeModel& model, const ImplicitDomain& domain, const CheckerConfig& config) {
  ConditionReport report;
  report.eps_grid = config.eps_grid;
  report.time_grid = config.time_grid;
  report.delta_abs = config.delta_abs;
  report.delta_margin = config.delta_margin;
  report.p_min = config.p_min;
  report.samples_per_eps = config.samples_per_eps;
  report.refine_steps = config.refine_steps;
  report.seed = config.seed;

  auto guarded = [&](const char* stage, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      report.errors.push_back(std::string(stage) + ": " + e.what());
    }
  };

  guarded("regularity", [&] {
    const double margin = 3.0 * (config.eps_grid.empty() ? 0.0 : config.eps_grid.front());
    SampleBox box{domain.box_lower().array() - margin, domain.box_upper().array() + margin, 0.0, 0.0};
    if (!config.time_grid.empty()) {
      box.t_min = *std::min_element(config.time_grid.begin(), config.time_grid.end());
      box.t_max = *std::max_element(config.time_grid.begin(), config.time_grid.end());
    }
    report.regularity =
        check_regularity(model, config.lipschitz_bound, box, config.regularity_pairs, derive_seed(config.seed, 0xC1));
    report.regularity_evaluated = true;
  });
  guarded("condition2", [&] {
    report.cond2_sup = condition2_profile(model, domain, config.eps_grid, config.time_grid, config.samples_per_eps,
                                          config.seed, config.refine_steps, config.exec);
  });
  guarded("condition3", [&] {
    report.cond3_sup = condition3_profile(model, domain, config.eps_grid, config.time_grid, config.samples_per_eps,
                                          config.seed, config.refine_steps, config.exec);
  });
  guarded("verdict", [&] { rederive_verdicts(report); });
  return report;
}

}  // namespace viability
