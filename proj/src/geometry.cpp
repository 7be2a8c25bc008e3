#include "viability/geometry.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "viability/errors.hpp"

namespace viability {

namespace {

constexpr double kGradientFloor = 1e-14;

double ipow(double base, int exponent) {
  double result = 1.0;
  for (int i = 0; i < exponent; ++i) result *= base;
  return result;
}

Vec random_direction(RandomStream& rng, int n) {
  Vec d(n);
  for (;;) {
    for (int i = 0; i < n; ++i) d(i) = rng.normal();
    const double norm = d.norm();
    if (norm > 1e-300) return d / norm;
  }
}

}  // namespace

std::string to_string(DomainKind kind) {
  switch (kind) {
    case DomainKind::Ball: return "ball";
    case DomainKind::Ellipsoid: return "ellipsoid";
    case DomainKind::EvenPNormBall: return "even_p_norm_ball";
  }
  return "unknown";
}

std::string to_string(Region region) {
  switch (region) {
    case Region::InsideK: return "inside_K";
    case Region::InKEps: return "in_Keps";
    case Region::InShellK3Eps: return "in_shell_K3eps";
    case Region::Outside: return "outside";
  }
  return "unknown";
}

ImplicitDomain::ImplicitDomain(DomainKind kind, Vec center, Vec scales, int exponent)
    : kind_(kind), center_(std::move(center)), scales_(std::move(scales)), exponent_(exponent) {
  if (center_.size() < 1) throw std::invalid_argument("domain dimension must be positive");
  if (!center_.allFinite() || !scales_.allFinite() || (scales_.array() <= 0.0).any())
    throw std::invalid_argument("domain scales must be finite and positive");

  if (kind_ == DomainKind::EvenPNormBall && dimension() > 1) {
    // Envelope for rejection sampling of the radial parameterization.
    RandomStream rng(0x5EEDB0u);
    double bound = 0.0;
    for (int i = 0; i < 20000; ++i) bound = std::max(bound, radial_area_weight(random_direction(rng, dimension())));
    for (int i = 0; i < dimension(); ++i) bound = std::max(bound, radial_area_weight(Vec::Unit(dimension(), i)));
    bound = std::max(bound, radial_area_weight(Vec::Ones(dimension()).normalized()));
    radial_weight_bound_ = 1.1 * bound;
  }
}

ImplicitDomain ImplicitDomain::ball(Vec center, double radius) {
  const auto n = center.size();
  return ImplicitDomain(DomainKind::Ball, std::move(center), Vec::Constant(n, radius), 2);
}

ImplicitDomain ImplicitDomain::ellipsoid(Vec center, Vec semiaxes) {
  if (center.size() != semiaxes.size()) throw std::invalid_argument("ellipsoid center/semiaxes size mismatch");
  return ImplicitDomain(DomainKind::Ellipsoid, std::move(center), std::move(semiaxes), 2);
}

ImplicitDomain ImplicitDomain::even_p_norm_ball(Vec center, double radius, int p) {
  if (p < 2 || p % 2 != 0) throw std::invalid_argument("p-norm exponent must be even and >= 2");
  const auto n = center.size();
  return ImplicitDomain(DomainKind::EvenPNormBall, std::move(center), Vec::Constant(n, radius), p);
}

double ImplicitDomain::signed_level(const Vec& x) const {
  if (kind_ == DomainKind::Ball) return (x - center_).norm() - scales_(0);
  double q = 0.0;
  for (int i = 0; i < dimension(); ++i) q += ipow((x(i) - center_(i)) / scales_(i), exponent_);
  return q - 1.0;
}

Vec ImplicitDomain::level_gradient(const Vec& x) const {
  const Vec u = x - center_;
  if (kind_ == DomainKind::Ball) {
    const double r = u.norm();
    if (r == 0.0) return Vec::Zero(dimension());
    return u / r;
  }
  Vec g(dimension());
  for (int i = 0; i < dimension(); ++i)
    g(i) = exponent_ * ipow(u(i) / scales_(i), exponent_ - 1) / scales_(i);
  return g;
}

Mat ImplicitDomain::level_hessian(const Vec& x) const {
  const int n = dimension();
  const Vec u = x - center_;
  if (kind_ == DomainKind::Ball) {
    const double r = u.norm();
    if (r == 0.0) return Mat::Zero(n, n);
    const Vec d = u / r;
    return (Mat::Identity(n, n) - d * d.transpose()) / r;
  }
  Mat h = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i)
    h(i, i) = exponent_ * (exponent_ - 1) * ipow(u(i) / scales_(i), exponent_ - 2) / (scales_(i) * scales_(i));
  return h;
}

Vec ImplicitDomain::outward_normal(const Vec& z) const {
  const Vec g = level_gradient(z);
  const double norm = g.norm();
  if (!(norm > kGradientFloor)) throw DegenerateGradient("level gradient vanishes at the requested point");
  return g / norm;
}

Vec ImplicitDomain::boundary_point_along(const Vec& direction) const {
  if (kind_ == DomainKind::Ball) return center_ + scales_(0) * direction;
  double sum = 0.0;
  for (int i = 0; i < dimension(); ++i) sum += ipow(direction(i) / scales_(i), exponent_);
  return center_ + std::pow(sum, -1.0 / exponent_) * direction;
}

Projection ImplicitDomain::project_to_boundary(const Vec& x) const {
  if (x.size() != dimension()) throw std::invalid_argument("point dimension does not match domain");
  if (kind_ == DomainKind::Ball) {
    const Vec u = x - center_;
    const double r = u.norm();
    const Vec direction = r > 0.0 ? Vec(u / r) : Vec(Vec::Unit(dimension(), 0));
    return {center_ + scales_(0) * direction, std::abs(r - scales_(0))};
  }
  return project_superellipsoid(x);
}

bool ImplicitDomain::newton_kkt(const Vec& x, Vec& z, double& lambda) const {
  const int n = dimension();
  const double scale = std::max(1.0, characteristic_length());
  const double tol = options_.tolerance * scale;

  auto residual = [&](const Vec& zz, double lam) {
    Vec f(n + 1);
    f.head(n) = zz - x + lam * level_gradient(zz);
    f(n) = signed_level(zz);
    return f;
  };

  Vec f = residual(z, lambda);
  for (int it = 0; it < options_.max_iterations; ++it) {
    if (!f.allFinite()) return false;
    if (f.head(n).norm() <= tol && std::abs(f(n)) <= options_.level_tolerance) return true;

    const Vec g = level_gradient(z);
    Mat jac = Mat::Zero(n + 1, n + 1);
    jac.topLeftCorner(n, n) = Mat::Identity(n, n) + lambda * level_hessian(z);
    jac.topRightCorner(n, 1) = g;
    jac.bottomLeftCorner(1, n) = g.transpose();
    const Vec step = jac.colPivHouseholderQr().solve(-f);
    if (!step.allFinite()) return false;

    const double f_norm = f.norm();
    double t = 1.0;
    bool accepted = false;
    while (t > 1e-10) {
      const Vec z_try = z + t * step.head(n);
      const double lam_try = lambda + t * step(n);
      const Vec f_try = residual(z_try, lam_try);
      if (f_try.allFinite() && f_try.norm() < (1.0 - 1e-4 * t) * f_norm) {
        z = z_try;
        lambda = lam_try;
        f = f_try;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) return f.head(n).norm() <= 10 * tol && std::abs(f(n)) <= options_.level_tolerance;
  }
  return false;
}

Projection ImplicitDomain::project_superellipsoid(const Vec& x) const {
  const int n = dimension();
  const double level = signed_level(x);
  const double scale = characteristic_length();

  std::vector<Vec> starts;

  // Gradient-flow start: Newton steps along grad Q until the level set is reached.
  {
    Vec z = x;
    if (level_gradient(z).norm() <= kGradientFloor) z(0) += 1e-7 * scale;
    bool ok = false;
    for (int it = 0; it < 200; ++it) {
      const Vec g = level_gradient(z);
      const double q = signed_level(z);
      if (std::abs(q) <= 1e-14) {
        ok = true;
        break;
      }
      const double gg = g.squaredNorm();
      if (!(gg > 0.0)) break;
      Vec step = q * g / gg;
      // Cap the step so high-order level functions cannot overshoot wildly.
      const double limit = 0.5 * std::max(scale, (z - center_).norm());
      if (step.norm() > limit) step *= limit / step.norm();
      z -= step;
      if (!z.allFinite()) break;
    }
    if (ok) starts.push_back(z);
  }
  {
    Vec d = x - center_;
    if (d.norm() <= 1e-300) d = Vec::Unit(n, 0);
    starts.push_back(boundary_point_along(d.normalized()));
  }
  if (level < 0.0) {
    for (int i = 0; i < n; ++i) {
      starts.push_back(boundary_point_along(Vec::Unit(n, i)));
      starts.push_back(boundary_point_along(-Vec::Unit(n, i)));
    }
  }

  bool found = false;
  Projection best{Vec(), std::numeric_limits<double>::infinity()};
  for (const Vec& start : starts) {
    Vec z = start;
    const Vec g = level_gradient(z);
    double lambda = g.squaredNorm() > 0.0 ? (x - z).dot(g) / g.squaredNorm() : 0.0;
    if (!newton_kkt(x, z, lambda)) continue;
    const double distance = (x - z).norm();
    // Outside a convex level set the KKT point with lambda >= 0 is the unique projection.
    if (level > 0.0 && lambda >= 0.0) return {z, distance};
    if (distance < best.distance) {
      best = {z, distance};
      found = true;
    }
  }
  if (!found) throw NoConvergence("boundary projection did not converge");
  return best;
}

double ImplicitDomain::signed_distance(const Vec& x) const {
  if (kind_ == DomainKind::Ball) return (x - center_).norm() - scales_(0);
  const double q = signed_level(x);
  if (q == 0.0) return 0.0;
  const double d = project_to_boundary(x).distance;
  return q < 0.0 ? -d : d;
}

Region ImplicitDomain::offset_membership(const Vec& x, double eps) const {
  if (!(eps > 0.0)) throw std::invalid_argument("offset_membership requires eps > 0");
  const double d = signed_distance(x);
  if (d <= 0.0) return Region::InsideK;
  if (d <= eps) return Region::InKEps;
  if (d <= 3.0 * eps) return Region::InShellK3Eps;
  return Region::Outside;
}

double ImplicitDomain::radial_area_weight(const Vec& unit_direction) const {
  const Vec p = boundary_point_along(unit_direction);
  const double rho = (p - center_).norm();
  const Vec normal = outward_normal(p);
  return std::pow(rho, dimension() - 1) / unit_direction.dot(normal);
}

Vec ImplicitDomain::sample_boundary_point(RandomStream& rng) const {
  const int n = dimension();
  switch (kind_) {
    case DomainKind::Ball:
      return center_ + scales_(0) * random_direction(rng, n);
    case DomainKind::Ellipsoid: {
      // Linear image of the unit sphere; the area element is det(S) |S^{-1} u|.
      const double min_axis = scales_.minCoeff();
      for (;;) {
        const Vec u = random_direction(rng, n);
        const double accept = min_axis * u.cwiseQuotient(scales_).norm();
        if (rng.uniform() <= accept) return center_ + scales_.cwiseProduct(u);
      }
    }
    case DomainKind::EvenPNormBall: {
      if (n == 1) return boundary_point_along(random_direction(rng, n));
      for (;;) {
        const Vec u = random_direction(rng, n);
        if (rng.uniform() * radial_weight_bound_ <= radial_area_weight(u)) return boundary_point_along(u);
      }
    }
  }
  throw std::logic_error("unknown domain kind");
}

std::vector<BoundarySample> ImplicitDomain::sample_offset_boundary(double eps, std::size_t count,
                                                                   std::uint64_t seed) const {
  if (!(eps >= 0.0)) throw std::invalid_argument("sample_offset_boundary requires eps >= 0");
  if (count < 1) throw std::invalid_argument("sample_offset_boundary requires count >= 1");
  RandomStream rng(seed);
  std::vector<BoundarySample> samples;
  samples.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Vec foot = sample_boundary_point(rng);
    Vec normal = outward_normal(foot);
    Vec point = foot + eps * normal;
    samples.push_back({std::move(point), std::move(normal), eps, std::move(foot)});
  }
  return samples;
}

}  // namespace viability
