#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "viability/geometry.hpp"
#include "viability/parallel.hpp"
#include "viability/sde_model.hpp"

namespace viability {

struct PathResult {
  bool exited = false;
  std::optional<double> exit_time;
  Vec final_state;
  std::size_t steps_taken = 0;
};

struct ExitEstimate {
  std::size_t n_paths = 0;
  std::size_t n_exits = 0;
  std::size_t n_nonfinite = 0;  // excluded from p_hat
  double p_hat = 0.0;
  double ci_low = 0.0;
  double ci_high = 1.0;
  double dt = 0.0;
  double T = 0.0;
  std::uint64_t seed = 0;
};

/// Wilson score interval for k successes in n trials; z = 1.96 gives 95%.
std::pair<double, double> wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959963984540054);

/// Standard normal increments scaled by sqrt(h) for (seed, path, step).
/// Counter-based: independent of the order in which paths or steps are drawn.
void gaussian_increments(std::uint64_t seed, std::uint64_t path_index, std::uint64_t step_index, double h,
                         Vec& out);

/// x' = x + a(t, x) dt + sum_k b_k(t, x) dW_k. Throws NonFinite on overflow.
Vec em_step(const SdeModel& model, double t, const Vec& x, double dt, const Vec& dW);

/// Euler-Maruyama path until t >= T or the first post-step state with Q > 0.
/// The exit time therefore has resolution dt; the final step is shortened to hit T.
/// Throws ImmediateExit if x0 is outside K, NonFinite on blow-up.
PathResult simulate_path(const SdeModel& model, const ImplicitDomain& domain, const Vec& x0, double T, double dt,
                         std::uint64_t seed, std::uint64_t path_index);

/// Same increments as simulate_path but without stopping at the boundary.
Vec propagate(const SdeModel& model, const Vec& x0, double T, double dt, std::uint64_t seed,
              std::uint64_t path_index);

ExitEstimate exit_probability(const SdeModel& model, const ImplicitDomain& domain, const Vec& x0, double T, double dt,
                              std::size_t n_paths, std::uint64_t seed, ExecPolicy policy = {});

/// exit_probability at each dt in a decreasing list, sharing seed and path count.
std::vector<ExitEstimate> dt_convergence_study(const SdeModel& model, const ImplicitDomain& domain, const Vec& x0,
                                               double T, const std::vector<double>& dt_list, std::size_t n_paths,
                                               std::uint64_t seed, ExecPolicy policy = {});

}  // namespace viability
