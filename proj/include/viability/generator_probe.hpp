#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "viability/geometry.hpp"
#include "viability/mollifier.hpp"
#include "viability/parallel.hpp"
#include "viability/sde_model.hpp"

namespace viability {

/// (A eta)(x) = a(s, x) . grad eta(x) + 1/2 trace(sigma(s, x) Hess eta(x)).
double apply_generator(const SdeModel& model, const SmoothedIndicator& indicator, double s, const Vec& x);

struct ShellProbeResult {
  double eps = 0.0;
  double time = 0.0;
  std::vector<Vec> points;
  std::vector<double> distances;
  std::vector<Region> regions;
  std::vector<double> values;
  double min_value = 0.0;
  double tolerance_used = 0.0;
  bool pass = false;
};

/// 1e-3 (sup |a| + sup |sigma|_2) eps^-2 factor over the given points.
double default_shell_tolerance(const SdeModel& model, double s, std::span<const Vec> points, double eps,
                               double factor = 1.0);

/// Points at distance uniform in (eps, 3 eps) from K, along area-weighted boundary normals.
std::vector<Vec> sample_shell(const ImplicitDomain& domain, double eps, std::size_t count, std::uint64_t seed,
                              std::vector<double>* distances = nullptr);

/// Evaluates A eta_eps on n_points shell points; passes iff min >= -tol_shell.
/// Without an explicit tolerance the default_shell_tolerance rule is used.
ShellProbeResult shell_sign_check(const SdeModel& model, const SmoothedIndicator& indicator, double s,
                                  std::size_t n_points, std::uint64_t seed, std::optional<double> tol_shell = {},
                                  double tol_factor = 1.0, ExecPolicy exec = {});

/// Initial law for the expectation gap: point mass, or uniform in a sub-ball.
struct InitialLaw {
  Vec center;
  double radius = 0.0;  // 0 means point mass at center

  Vec draw(std::uint64_t seed, std::uint64_t path_index) const;
};

struct GapEstimate {
  double gap = 0.0;
  double std_error = 0.0;
  std::size_t n_paths = 0;
};

/// Paired estimate of E eta(xi(t)) - E eta(xi(0)) over unstopped EM paths.
GapEstimate lemma1_gap(const SdeModel& model, const SmoothedIndicator& indicator, const InitialLaw& initial,
                       double t_final, double dt, std::size_t n_paths, std::uint64_t seed, ExecPolicy exec = {});

/// expected_eta(cloud) - fraction of the cloud inside K, an estimate of l_eps.
double statement5_gap(const SmoothedIndicator& indicator, std::span<const Vec> cloud);

}  // namespace viability
