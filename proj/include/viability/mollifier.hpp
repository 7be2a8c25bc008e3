#pragma once

#include <span>
#include <vector>

#include "viability/geometry.hpp"
#include "viability/types.hpp"

namespace viability {

/// I_n = integral over the unit ball of exp(-1 / (1 - |xi|^2)), by radial reduction
/// |S^{n-1}| * int_0^1 r^{n-1} exp(-1/(1-r^2)) dr.
double unit_bump_integral(int n, double tol = 1e-13);

/// c_eps with c_eps * eps^n * I_n = 1.
double normalization_constant(int n, double eps, double tol = 1e-13);

/// Bump function omega_eps(x) = c_eps exp(-eps^2 / (eps^2 - |x|^2)) for |x| < eps, else 0.
struct MollifierSpec {
  int dimension = 1;
  double radius = 1.0;
  double c_eps = 0.0;

  static MollifierSpec make(int dimension, double radius, double tol = 1e-13);
};

double omega(const MollifierSpec& spec, const Vec& x);

/// Derivative of z -> omega(x - z) with respect to z, evaluated at u = x - z:
/// component i is f_i omega(u) with f_i = 2 eps^2 u_i / (eps^2 - |u|^2)^2.
/// The x-gradient is the negative of this.
Vec omega_gradient(const MollifierSpec& spec, const Vec& x_minus_z);

/// Hessian of omega(x - z) (identical in x and z):
/// (f_i f_j - 2 eps^2 delta_ij / D^2 - 8 eps^2 u_i u_j / D^3) omega(u), D = eps^2 - |u|^2.
Mat omega_hessian(const MollifierSpec& spec, const Vec& x_minus_z);

struct QuadratureConfig {
  /// Gauss-Legendre nodes across the diameter of the eps-ball (two lattice cells).
  int nodes_per_axis = 80;
  /// Halton points for dimensions above 3.
  int qmc_points = 1 << 16;
  /// Accuracy budget reported to callers of eta.
  double tol = 2e-3;
};

struct EtaValue {
  double value = 0.0;
  Vec gradient;
  Mat hessian;
};

/// eta_eps = chi_{K_2eps} * omega_eps, evaluated by quadrature.
///
/// For n <= 3 the nodes are a composite Gauss-Legendre rule on a lattice of
/// eps-sized cells anchored at the origin, so the node set is fixed in space
/// and the discrete eta is a smooth function of x whose exact derivatives are
/// the quadrature sums of the mollifier derivatives. For 3 < n <= 6 Halton
/// points fill the eps-ball around x.
///
/// Each lattice node carries the volume fraction of its cell inside K_2eps
/// (cell cut by the tangent plane of the offset surface), which removes the
/// staircase error of a 0/1 node indicator. The discrete convolution is divided
/// by the same rule applied to omega alone, so eta stays in [0, 1]; on K_eps and
/// outside K_3eps the plateau values 1 and 0 are returned exactly (the quadrature
/// residue there is below 1e-12).
class SmoothedIndicator {
 public:
  SmoothedIndicator(ImplicitDomain domain, double eps, QuadratureConfig quad = {});

  const ImplicitDomain& domain() const { return domain_; }
  double eps() const { return spec_.radius; }
  const MollifierSpec& mollifier() const { return spec_; }
  const QuadratureConfig& quadrature() const { return quad_; }
  double quad_tol() const { return quad_.tol; }

  double eta(const Vec& x) const;
  Vec eta_gradient(const Vec& x) const;
  Mat eta_hessian(const Vec& x) const;

  /// Value with gradient and Hessian from a single pass over the nodes.
  EtaValue evaluate(const Vec& x, int derivative_order = 2) const;

  /// Sample mean of eta over the points.
  double expected_eta(std::span<const Vec> points) const;

 private:
  double node_coverage(const Vec& z, std::span<const double> half_widths) const;
  EtaValue evaluate_lattice(const Vec& x, int order) const;
  EtaValue evaluate_qmc(const Vec& x, int order) const;

  ImplicitDomain domain_;
  MollifierSpec spec_;
  QuadratureConfig quad_;
  std::vector<double> cell_nodes_;    // on [0, 1]
  std::vector<double> cell_weights_;  // sum to 1
  std::vector<Vec> qmc_offsets_;      // unit-ball points for n > 3
};

}  // namespace viability
