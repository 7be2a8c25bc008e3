#include "viability/mc_simulator.hpp"

#include <cmath>
#include <stdexcept>

#include "viability/errors.hpp"
#include "viability/rng.hpp"

namespace viability {

std::pair<double, double> wilson_interval(std::size_t successes, std::size_t trials, double z) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  double low = std::max(0.0, center - half);
  double high = std::min(1.0, center + half);
  // Guard the ordering against rounding at p = 0 or 1.
  if (successes == 0) low = 0.0;
  if (successes == trials) high = 1.0;
  return {std::min(low, p), std::max(high, p)};
}

void gaussian_increments(std::uint64_t seed, std::uint64_t path_index, std::uint64_t step_index, double h,
                         Vec& out) {
  const auto key = Philox4x32::key_from(seed);
  const double scale = std::sqrt(h);
  const auto n = out.size();
  for (Eigen::Index i = 0; i < n; i += 2) {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(step_index),
                                  static_cast<std::uint32_t>(i / 2) | (static_cast<std::uint32_t>(step_index >> 32) << 16),
                                  static_cast<std::uint32_t>(path_index), static_cast<std::uint32_t>(path_index >> 32)};
    const auto pair = normal_pair(Philox4x32::generate(ctr, key));
    out(i) = scale * pair[0];
    if (i + 1 < n) out(i + 1) = scale * pair[1];
  }
}

namespace {

struct Workspace {
  Vec drift;
  Mat diffusion;
  Vec dW;

  explicit Workspace(int n) : drift(n), diffusion(n, n), dW(n) {}
};

void em_step_inplace(const SdeModel& model, double t, Vec& x, double dt, Workspace& ws) {
  model.drift_into(t, x, ws.drift);
  model.diffusion_into(t, x, ws.diffusion);
  x += dt * ws.drift;
  x.noalias() += ws.diffusion.transpose() * ws.dW;
  if (!x.allFinite()) throw NonFinite("state overflowed during Euler-Maruyama step");
}

template <class StopFn>
PathResult run_path(const SdeModel& model, const Vec& x0, double T, double dt, std::uint64_t seed,
                    std::uint64_t path_index, StopFn&& should_stop) {
  if (!(dt > 0.0) || !(T > 0.0)) throw std::invalid_argument("simulation needs T > 0 and dt > 0");
  if (dt > T) throw std::invalid_argument("simulation needs dt <= T");
  const int n = model.dimension();
  if (x0.size() != n) throw std::invalid_argument("initial state dimension mismatch");

  Workspace ws(n);
  PathResult result;
  result.final_state = x0;
  Vec& x = result.final_state;
  const auto full_steps = static_cast<std::uint64_t>(std::floor(T / dt * (1.0 + 1e-12)));
  const bool partial = T - static_cast<double>(full_steps) * dt > 1e-12 * T;
  const std::uint64_t total = full_steps + (partial ? 1 : 0);

  for (std::uint64_t step = 0; step < total; ++step) {
    const double t = static_cast<double>(step) * dt;
    const double h = step < full_steps ? dt : T - t;
    gaussian_increments(seed, path_index, step, h, ws.dW);
    em_step_inplace(model, t, x, h, ws);
    result.steps_taken = step + 1;
    const double t_next = step + 1 < total ? static_cast<double>(step + 1) * dt : T;
    if (should_stop(x)) {
      result.exited = true;
      result.exit_time = t_next;
      return result;
    }
  }
  return result;
}

}  // namespace

Vec em_step(const SdeModel& model, double t, const Vec& x, double dt, const Vec& dW) {
  if (!(dt > 0.0)) throw std::invalid_argument("em_step needs dt > 0");
  Workspace ws(model.dimension());
  ws.dW = dW;
  Vec out = x;
  em_step_inplace(model, t, out, dt, ws);
  return out;
}

PathResult simulate_path(const SdeModel& model, const ImplicitDomain& domain, const Vec& x0, double T, double dt,
                         std::uint64_t seed, std::uint64_t path_index) {
  if (domain.dimension() != model.dimension()) throw std::invalid_argument("model/domain dimension mismatch");
  if (domain.signed_level(x0) > 0.0) throw ImmediateExit("initial state lies outside the domain");
  return run_path(model, x0, T, dt, seed, path_index, [&](const Vec& x) { return domain.signed_level(x) > 0.0; });
}

Vec propagate(const SdeModel& model, const Vec& x0, double T, double dt, std::uint64_t seed,
              std::uint64_t path_index) {
  return run_path(model, x0, T, dt, seed, path_index, [](const Vec&) { return false; }).final_state;
}

ExitEstimate exit_probability(const SdeModel& model, const ImplicitDomain& domain, const Vec& x0, double T, double dt,
                              std::size_t n_paths, std::uint64_t seed, ExecPolicy policy) {
  if (n_paths < 1) throw std::invalid_argument("exit_probability needs n_paths >= 1");
  if (domain.signed_level(x0) > 0.0) throw ImmediateExit("initial state lies outside the domain");

  enum class Outcome : unsigned char { Stayed, Exited, NonFinite };
  std::vector<Outcome> outcomes(n_paths, Outcome::Stayed);
  parallel_for(n_paths, policy, [&](std::size_t i) {
    try {
      outcomes[i] = simulate_path(model, domain, x0, T, dt, seed, i).exited ? Outcome::Exited : Outcome::Stayed;
    } catch (const NonFinite&) {
      outcomes[i] = Outcome::NonFinite;
    }
  });

  ExitEstimate est;
  est.n_paths = n_paths;
  est.dt = dt;
  est.T = T;
  est.seed = seed;
  for (const Outcome o : outcomes) {
    if (o == Outcome::Exited) ++est.n_exits;
    if (o == Outcome::NonFinite) ++est.n_nonfinite;
  }
  const std::size_t valid = n_paths - est.n_nonfinite;
  est.p_hat = valid > 0 ? static_cast<double>(est.n_exits) / static_cast<double>(valid) : 0.0;
  std::tie(est.ci_low, est.ci_high) = wilson_interval(est.n_exits, valid);
  return est;
}

std::vector<ExitEstimate> dt_convergence_study(const SdeModel& model, const ImplicitDomain& domain, const Vec& x0,
                                               double T, const std::vector<double>& dt_list, std::size_t n_paths,
                                               std::uint64_t seed, ExecPolicy policy) {
  if (dt_list.empty()) throw std::invalid_argument("dt_list must not be empty");
  for (std::size_t i = 1; i < dt_list.size(); ++i)
    if (!(dt_list[i] < dt_list[i - 1])) throw std::invalid_argument("dt_list must be strictly decreasing");
  std::vector<ExitEstimate> table;
  table.reserve(dt_list.size());
  for (const double dt : dt_list) table.push_back(exit_probability(model, domain, x0, T, dt, n_paths, seed, policy));
  return table;
}

}  // namespace viability
