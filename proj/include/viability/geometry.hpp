#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "viability/rng.hpp"
#include "viability/types.hpp"

namespace viability {

enum class DomainKind { Ball, Ellipsoid, EvenPNormBall };

std::string to_string(DomainKind kind);

/// Position of a point relative to K and its offsets K_eps, K_3eps.
enum class Region { InsideK, InKEps, InShellK3Eps, Outside };

std::string to_string(Region region);

/// Point on the offset surface S_eps together with its unit normal.
struct BoundarySample {
  Vec point;
  Vec normal;
  double offset = 0.0;  // dist(point, K)
  Vec foot;             // nearest point of the boundary of K
};

struct Projection {
  Vec foot;
  double distance = 0.0;  // |x - foot|, unsigned
};

struct ProjectionOptions {
  int max_iterations = 100;
  double tolerance = 1e-10;
  double level_tolerance = 1e-10;
};

/// Compact domain K = {x : Q(x) <= 0} with a smooth level function Q.
///
/// Ball: Q(x) = |x - c| - r, an exact signed distance.
/// Ellipsoid and even p-norm ball share the superellipsoid form
/// Q(x) = sum_i ((x_i - c_i) / s_i)^p - 1 with p = 2 for the ellipsoid.
///
/// Distances are Euclidean (nearest-point projection onto the boundary), so
/// K_eps is the true union of eps-balls, not the level set {Q <= eps}.
class ImplicitDomain {
 public:
  static ImplicitDomain ball(Vec center, double radius);
  static ImplicitDomain ellipsoid(Vec center, Vec semiaxes);
  static ImplicitDomain even_p_norm_ball(Vec center, double radius, int p);

  int dimension() const { return static_cast<int>(center_.size()); }
  DomainKind kind() const { return kind_; }
  const Vec& center() const { return center_; }
  /// Radius for balls, per-axis scale otherwise.
  const Vec& scales() const { return scales_; }
  int exponent() const { return exponent_; }
  double radius() const { return scales_(0); }

  const ProjectionOptions& projection_options() const { return options_; }
  void set_projection_options(const ProjectionOptions& options) { options_ = options; }

  /// Q(x): negative inside, zero on the boundary, positive outside.
  double signed_level(const Vec& x) const;
  Vec level_gradient(const Vec& x) const;
  Mat level_hessian(const Vec& x) const;

  /// grad Q / |grad Q|. Throws DegenerateGradient where the gradient vanishes.
  Vec outward_normal(const Vec& z) const;

  /// Nearest boundary point. Throws NoConvergence if the KKT iteration stalls.
  /// At symmetric interior points (e.g. a ball center) the foot is taken along
  /// +e_1, the gradient direction of the point nudged along the first axis.
  Projection project_to_boundary(const Vec& x) const;

  /// Euclidean signed distance: -dist(x, boundary) inside K, dist(x, K) outside.
  double signed_distance(const Vec& x) const;

  /// Classifies x by d = signed distance against eps and 3 eps.
  Region offset_membership(const Vec& x, double eps) const;

  /// Area-weighted samples of the boundary, pushed eps along the outward normal.
  /// Deterministic in seed; the first k samples do not depend on count.
  std::vector<BoundarySample> sample_offset_boundary(double eps, std::size_t count, std::uint64_t seed) const;

  /// Axis-aligned box containing K.
  Vec box_lower() const { return center_ - scales_.cwiseAbs().maxCoeff() * Vec::Ones(dimension()); }
  Vec box_upper() const { return center_ + scales_.cwiseAbs().maxCoeff() * Vec::Ones(dimension()); }

  /// Largest scale of the domain; used for step sizes.
  double characteristic_length() const { return scales_.maxCoeff(); }

 private:
  ImplicitDomain(DomainKind kind, Vec center, Vec scales, int exponent);

  Projection project_superellipsoid(const Vec& x) const;
  bool newton_kkt(const Vec& x, Vec& z, double& lambda) const;
  Vec boundary_point_along(const Vec& direction) const;
  Vec sample_boundary_point(RandomStream& rng) const;
  double radial_area_weight(const Vec& unit_direction) const;

  DomainKind kind_;
  Vec center_;
  Vec scales_;
  int exponent_ = 2;
  ProjectionOptions options_;
  double radial_weight_bound_ = 1.0;
};

}  // namespace viability
