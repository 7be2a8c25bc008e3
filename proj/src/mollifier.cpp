#include "viability/mollifier.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "viability/quadrature.hpp"

namespace viability {

namespace {

constexpr double kExponentFloor = -700.0;

// exp(-eps^2 / (eps^2 - r^2)) times c, or 0 past the cutoff / below the clamp.
double bump(double c, double eps2, double r2, double& denom) {
  denom = eps2 - r2;
  if (!(denom > 0.0)) return 0.0;
  const double exponent = -eps2 / denom;
  if (exponent < kExponentFloor) return 0.0;
  return c * std::exp(exponent);
}

double unit_sphere_area(int n) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

}  // namespace

double unit_bump_integral(int n, double tol) {
  if (n < 1) throw std::invalid_argument("dimension must be positive");
  const double area = unit_sphere_area(n);
  const auto radial = [n](double r) {
    const double d = 1.0 - r * r;
    if (!(d > 0.0)) return 0.0;
    const double exponent = -1.0 / d;
    if (exponent < kExponentFloor) return 0.0;
    return std::pow(r, n - 1) * std::exp(exponent);
  };
  return area * quadrature::adaptive_gauss_legendre(radial, 0.0, 1.0, tol / area);
}

double normalization_constant(int n, double eps, double tol) {
  if (!(eps > 0.0)) throw std::invalid_argument("mollifier radius must be positive");
  return 1.0 / (unit_bump_integral(n, tol) * std::pow(eps, n));
}

MollifierSpec MollifierSpec::make(int dimension, double radius, double tol) {
  return {dimension, radius, normalization_constant(dimension, radius, tol)};
}

double omega(const MollifierSpec& spec, const Vec& x) {
  double denom = 0.0;
  return bump(spec.c_eps, spec.radius * spec.radius, x.squaredNorm(), denom);
}

Vec omega_gradient(const MollifierSpec& spec, const Vec& x_minus_z) {
  const double eps2 = spec.radius * spec.radius;
  double denom = 0.0;
  const double w = bump(spec.c_eps, eps2, x_minus_z.squaredNorm(), denom);
  if (w == 0.0) return Vec::Zero(x_minus_z.size());
  return (2.0 * eps2 / (denom * denom) * w) * x_minus_z;
}

Mat omega_hessian(const MollifierSpec& spec, const Vec& x_minus_z) {
  const auto n = x_minus_z.size();
  const double eps2 = spec.radius * spec.radius;
  double denom = 0.0;
  const double w = bump(spec.c_eps, eps2, x_minus_z.squaredNorm(), denom);
  if (w == 0.0) return Mat::Zero(n, n);
  const double d2 = denom * denom;
  const double fscale = 2.0 * eps2 / d2;
  const double uu = (fscale * fscale - 8.0 * eps2 / (d2 * denom)) * w;
  const double diag = -fscale * w;
  Mat h(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      h(i, j) = uu * (x_minus_z(i) * x_minus_z(j)) + (i == j ? diag : 0.0);
      h(j, i) = h(i, j);
    }
  }
  return h;
}

SmoothedIndicator::SmoothedIndicator(ImplicitDomain domain, double eps, QuadratureConfig quad)
    : domain_(std::move(domain)), quad_(quad) {
  const int n = domain_.dimension();
  if (!(eps > 0.0)) throw std::invalid_argument("smoothed indicator requires eps > 0");
  if (n > 6) throw std::invalid_argument("smoothed indicator supports dimension <= 6");
  if (quad_.nodes_per_axis < 2 || quad_.nodes_per_axis % 2 != 0)
    throw std::invalid_argument("quad.nodes_per_axis must be even and >= 2");
  spec_ = MollifierSpec::make(n, eps);

  if (n <= 3) {
    const auto rule = quadrature::gauss_legendre(quad_.nodes_per_axis / 2);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      cell_nodes_.push_back(0.5 * (rule.nodes[i] + 1.0));
      cell_weights_.push_back(0.5 * rule.weights[i]);
    }
  } else {
    if (quad_.qmc_points < 1) throw std::invalid_argument("quad.qmc_points must be positive");
    for (unsigned long index = 1; static_cast<int>(qmc_offsets_.size()) < quad_.qmc_points; ++index) {
      const auto p = quadrature::halton_point(index, n);
      Vec v(n);
      for (int d = 0; d < n; ++d) v(d) = 2.0 * p[d] - 1.0;
      if (v.squaredNorm() < 1.0) qmc_offsets_.push_back(v);
    }
  }
}

namespace {

// P(sum_i U_i <= t) for independent U_i uniform on [-a_i, a_i]; widths far below
// the largest are dropped to keep the alternating sum well conditioned.
double uniform_sum_cdf(double t, std::span<const double> half_widths) {
  double largest = 0.0;
  for (double a : half_widths) largest = std::max(largest, a);
  std::array<double, 3> a{};
  int m = 0;
  for (double w : half_widths)
    if (w > 1e-3 * largest && m < 3) a[m++] = w;
  if (m == 0) return t >= 0.0 ? 1.0 : 0.0;
  double total = 0.0;
  for (int i = 0; i < m; ++i) total += a[i];
  if (t >= total) return 1.0;
  if (t <= -total) return 0.0;
  double sum = 0.0;
  double scale = 1.0;
  for (int i = 0; i < m; ++i) scale *= 2.0 * a[i] * (i + 1);
  for (int mask = 0; mask < (1 << m); ++mask) {
    double shift = t;
    double sign = 1.0;
    for (int i = 0; i < m; ++i) {
      const bool minus = (mask >> i) & 1;
      shift += minus ? -a[i] : a[i];
      if (minus) sign = -sign;
    }
    if (shift > 0.0) sum += sign * std::pow(shift, m);
  }
  return std::clamp(sum / scale, 0.0, 1.0);
}

}  // namespace

double SmoothedIndicator::node_coverage(const Vec& z, std::span<const double> half_widths) const {
  constexpr double kTie = 1e-12;
  const int n = domain_.dimension();
  double reach = 0.0;
  for (double h : half_widths) reach += h;
  if (domain_.signed_level(z) <= 0.0) return 1.0;
  const Projection p = domain_.project_to_boundary(z);
  const double margin = 2.0 * eps() - p.distance;  // > 0 inside K_2eps
  if (margin >= reach) return 1.0;
  if (margin <= -reach - kTie) return 0.0;
  if (reach == 0.0) return margin >= -kTie ? 1.0 : 0.0;
  // Box of the node cut by the tangent plane of the offset surface.
  std::array<double, 3> projected{};
  const Vec normal = (z - p.foot) / p.distance;
  for (int i = 0; i < n; ++i) projected[i] = half_widths[i] * std::abs(normal(i));
  return uniform_sum_cdf(margin, std::span<const double>(projected.data(), n));
}

namespace {

struct Accumulator {
  double num = 0.0;
  double den = 0.0;
  Vec grad_num;
  Vec grad_den;
  Mat hess_num;
  Mat hess_den;

  Accumulator(int n, int order) {
    if (order >= 1) {
      grad_num = Vec::Zero(n);
      grad_den = Vec::Zero(n);
    }
    if (order >= 2) {
      hess_num = Mat::Zero(n, n);
      hess_den = Mat::Zero(n, n);
    }
  }

  // u = x - z, weight = quadrature weight * omega(u), f = 2 eps^2 u / D^2.
  // chi in [0, 1] is the fraction of the node's cell inside K_2eps.
  void add(const Vec& u, double weight, double eps2, double denom, double chi, int order) {
    den += weight;
    num += chi * weight;
    if (order < 1) return;
    const double d2 = denom * denom;
    const double fscale = 2.0 * eps2 / d2;
    // x-gradient of omega(x - z) is -f omega.
    const double gscale = -fscale * weight;
    grad_den += gscale * u;
    if (chi > 0.0) grad_num += (chi * gscale) * u;
    if (order < 2) return;
    const double uu = (fscale * fscale - 8.0 * eps2 / (d2 * denom)) * weight;
    const double diag = -2.0 * eps2 / d2 * weight;
    const int n = static_cast<int>(u.size());
    for (int j = 0; j < n; ++j) {
      for (int i = j; i < n; ++i) {
        const double v = uu * u(i) * u(j) + (i == j ? diag : 0.0);
        hess_den(i, j) += v;
        if (chi > 0.0) hess_num(i, j) += chi * v;
      }
    }
  }

  EtaValue finish(int order) {
    if (!(den > 0.0)) throw std::logic_error("empty mollifier quadrature");
    EtaValue out;
    const double eta = num / den;
    out.value = std::clamp(eta, 0.0, 1.0);
    if (order >= 1) out.gradient = (grad_num - eta * grad_den) / den;
    if (order >= 2) {
      hess_num = hess_num.selfadjointView<Eigen::Lower>();
      hess_den = hess_den.selfadjointView<Eigen::Lower>();
      out.hessian = (hess_num - eta * hess_den - out.gradient * grad_den.transpose() -
                     grad_den * out.gradient.transpose()) /
                    den;
      out.hessian = 0.5 * (out.hessian + out.hessian.transpose()).eval();
    }
    return out;
  }
};

}  // namespace

EtaValue SmoothedIndicator::evaluate_lattice(const Vec& x, int order) const {
  const int n = domain_.dimension();
  const double eps = this->eps();
  const double eps2 = eps * eps;

  std::vector<std::vector<double>> coords(n);
  std::vector<std::vector<double>> weights(n);
  for (int a = 0; a < n; ++a) {
    const long first = static_cast<long>(std::floor((x(a) - eps) / eps));
    const long last = static_cast<long>(std::floor((x(a) + eps) / eps));
    for (long cell = first; cell <= last; ++cell) {
      for (std::size_t j = 0; j < cell_nodes_.size(); ++j) {
        const double c = (static_cast<double>(cell) + cell_nodes_[j]) * eps;
        if (std::abs(c - x(a)) < eps) {
          coords[a].push_back(c);
          weights[a].push_back(cell_weights_[j] * eps);
        }
      }
    }
  }

  Accumulator acc(n, order);
  std::vector<std::size_t> idx(n, 0);
  std::array<double, 3> half{};
  Vec z(n);
  Vec u(n);
  for (;;) {
    double w = 1.0;
    for (int a = 0; a < n; ++a) {
      z(a) = coords[a][idx[a]];
      w *= weights[a][idx[a]];
      half[a] = 0.5 * weights[a][idx[a]];
    }
    u = x - z;
    double denom = 0.0;
    const double value = bump(spec_.c_eps, eps2, u.squaredNorm(), denom);
    if (value > 0.0) {
      const double chi = node_coverage(z, std::span<const double>(half.data(), n));
      acc.add(u, w * value, eps2, denom, chi, order);
    }

    int a = 0;
    while (a < n && ++idx[a] == coords[a].size()) idx[a++] = 0;
    if (a == n) break;
  }
  return acc.finish(order);
}

EtaValue SmoothedIndicator::evaluate_qmc(const Vec& x, int order) const {
  const int n = domain_.dimension();
  const double eps = this->eps();
  const double eps2 = eps * eps;
  Accumulator acc(n, order);
  Vec u(n);
  for (const Vec& offset : qmc_offsets_) {
    u = eps * offset;
    double denom = 0.0;
    const double value = bump(spec_.c_eps, eps2, u.squaredNorm(), denom);
    if (value > 0.0) acc.add(u, value, eps2, denom, node_coverage(x - u, {}), order);
  }
  return acc.finish(order);
}

EtaValue SmoothedIndicator::evaluate(const Vec& x, int derivative_order) const {
  if (x.size() != domain_.dimension()) throw std::invalid_argument("point dimension does not match domain");
  const int n = domain_.dimension();
  const double d = domain_.signed_distance(x);
  if (d <= eps() || d >= 3.0 * eps()) {
    EtaValue flat;
    flat.value = d <= eps() ? 1.0 : 0.0;
    if (derivative_order >= 1) flat.gradient = Vec::Zero(n);
    if (derivative_order >= 2) flat.hessian = Mat::Zero(n, n);
    return flat;
  }
  return n <= 3 ? evaluate_lattice(x, derivative_order) : evaluate_qmc(x, derivative_order);
}

double SmoothedIndicator::eta(const Vec& x) const { return evaluate(x, 0).value; }

Vec SmoothedIndicator::eta_gradient(const Vec& x) const { return evaluate(x, 1).gradient; }

Mat SmoothedIndicator::eta_hessian(const Vec& x) const { return evaluate(x, 2).hessian; }

double SmoothedIndicator::expected_eta(std::span<const Vec> points) const {
  if (points.empty()) throw std::invalid_argument("expected_eta needs at least one point");
  double sum = 0.0;
  for (const Vec& p : points) sum += eta(p);
  return sum / static_cast<double>(points.size());
}

}  // namespace viability
