#include "viability/generator_probe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "viability/errors.hpp"
#include "viability/mc_simulator.hpp"
#include "viability/rng.hpp"

namespace viability {

double apply_generator(const SdeModel& model, const SmoothedIndicator& indicator, double s, const Vec& x) {
  const EtaValue eta = indicator.evaluate(x, 2);
  const Vec a = model.drift(s, x);
  const Mat sigma = model.sigma(s, x);
  return a.dot(eta.gradient) + 0.5 * (sigma.cwiseProduct(eta.hessian)).sum();
}

double default_shell_tolerance(const SdeModel& model, double s, std::span<const Vec> points, double eps,
                               double factor) {
  double sup_drift = 0.0;
  double sup_sigma = 0.0;
  for (const Vec& x : points) {
    sup_drift = std::max(sup_drift, model.drift(s, x).norm());
    // sigma is PSD, so its spectral norm is |B|_2^2.
    const Mat b = model.diffusion(s, x);
    const double top = b.rows() > 0 ? Eigen::JacobiSVD<Mat>(b).singularValues()(0) : 0.0;
    sup_sigma = std::max(sup_sigma, top * top);
  }
  return 1e-3 * (sup_drift + sup_sigma) / (eps * eps) * factor;
}

std::vector<Vec> sample_shell(const ImplicitDomain& domain, double eps, std::size_t count, std::uint64_t seed,
                              std::vector<double>* distances) {
  if (!(eps > 0.0)) throw std::invalid_argument("shell sampling needs eps > 0");
  const auto feet = domain.sample_offset_boundary(0.0, count, seed);
  RandomStream rng(derive_seed(seed, 0x5E11));
  std::vector<Vec> points;
  points.reserve(count);
  if (distances) distances->clear();
  for (const auto& f : feet) {
    const double d = eps * (1.0 + 2.0 * rng.uniform());  // open interval (eps, 3 eps)
    points.push_back(f.point + d * f.normal);
    if (distances) distances->push_back(d);
  }
  return points;
}

ShellProbeResult shell_sign_check(const SdeModel& model, const SmoothedIndicator& indicator, double s,
                                  std::size_t n_points, std::uint64_t seed, std::optional<double> tol_shell,
                                  double tol_factor, ExecPolicy exec) {
  if (n_points < 1) throw std::invalid_argument("shell_sign_check needs n_points >= 1");
  const ImplicitDomain& domain = indicator.domain();
  const double eps = indicator.eps();

  ShellProbeResult result;
  result.eps = eps;
  result.time = s;
  result.points = sample_shell(domain, eps, n_points, seed, &result.distances);
  result.regions.resize(n_points);
  result.values.resize(n_points);
  parallel_for(n_points, exec, [&](std::size_t i) {
    result.regions[i] = domain.offset_membership(result.points[i], eps);
    result.values[i] = apply_generator(model, indicator, s, result.points[i]);
  });
  for (std::size_t i = 0; i < n_points; ++i)
    if (result.regions[i] != Region::InShellK3Eps) throw std::logic_error("shell sample left the shell");

  result.min_value = *std::min_element(result.values.begin(), result.values.end());
  result.tolerance_used = tol_shell ? *tol_shell : default_shell_tolerance(model, s, result.points, eps, tol_factor);
  result.pass = result.min_value >= -result.tolerance_used;
  return result;
}

Vec InitialLaw::draw(std::uint64_t seed, std::uint64_t path_index) const {
  if (radius <= 0.0) return center;
  const auto n = center.size();
  RandomStream rng(derive_seed(seed, 0x1A11), path_index);
  Vec d(n);
  for (Eigen::Index i = 0; i < n; ++i) d(i) = rng.normal();
  const double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(n));
  return center + r * d.normalized();
}

GapEstimate lemma1_gap(const SdeModel& model, const SmoothedIndicator& indicator, const InitialLaw& initial,
                       double t_final, double dt, std::size_t n_paths, std::uint64_t seed, ExecPolicy exec) {
  if (n_paths < 1) throw std::invalid_argument("lemma1_gap needs n_paths >= 1");
  std::vector<double> diffs(n_paths);
  std::vector<unsigned char> outside(n_paths, 0);
  parallel_for(n_paths, exec, [&](std::size_t i) {
    const Vec x0 = initial.draw(seed, i);
    if (indicator.domain().signed_level(x0) > 0.0) {
      outside[i] = 1;
      return;
    }
    const Vec xt = propagate(model, x0, t_final, dt, seed, i);
    diffs[i] = indicator.eta(xt) - indicator.eta(x0);
  });
  if (std::any_of(outside.begin(), outside.end(), [](unsigned char o) { return o != 0; }))
    throw ImmediateExit("initial law must be supported in K");

  const double n = static_cast<double>(n_paths);
  double mean = 0.0;
  for (const double d : diffs) mean += d;
  mean /= n;
  double var = 0.0;
  for (const double d : diffs) var += (d - mean) * (d - mean);
  var = n_paths > 1 ? var / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var / n), n_paths};
}

double statement5_gap(const SmoothedIndicator& indicator, std::span<const Vec> cloud) {
  if (cloud.empty()) throw std::invalid_argument("statement5_gap needs a nonempty cloud");
  std::size_t inside = 0;
  for (const Vec& p : cloud)
    if (indicator.domain().signed_level(p) <= 0.0) ++inside;
  return indicator.expected_eta(cloud) - static_cast<double>(inside) / static_cast<double>(cloud.size());
}

}  // namespace viability
