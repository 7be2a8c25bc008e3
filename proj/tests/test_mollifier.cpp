#include <doctest.h>

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "viability/geometry.hpp"
#include "viability/mollifier.hpp"
#include "viability/rng.hpp"

using namespace viability;

namespace {

// Frozen 30-digit values of the unit bump integrals.
constexpr double kI1 = 0.443993816168079437823;
constexpr double kI2 = 0.466512393178330068880;
constexpr double kI3 = 0.441088887276604400456;
constexpr double kC1 = 2.25228362104358101050;
constexpr double kC2 = 2.14356577579223660100;
constexpr double kC3 = 2.26711673960832645842;

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

Vec random_in_ball(RandomStream& rng, int n, double radius) {
  while (true) {
    Vec x(n);
    for (int i = 0; i < n; ++i) x(i) = (2 * rng.uniform() - 1) * radius;
    if (x.norm() < radius) return x;
  }
}

// Exact eta for the disk of radius R with eps-mollifier, by polar integration:
// the fraction of the circle |z - x| = r inside the disk of radius R + 2 eps is
// (pi - acos(c)) / pi with c = (R2^2 - |x|^2 - r^2) / (2 |x| r).
double disk_eta_oracle(double radius, double eps, double distance_from_center) {
  const double big = radius + 2 * eps;
  const double s = distance_from_center;
  const auto spec = MollifierSpec::make(2, eps);
  auto weight = [&](double r) { return omega(spec, v2(r, 0)) * r; };
  auto inside = [&](double r) {
    const double c = std::clamp((big * big - s * s - r * r) / (2 * s * r), -1.0, 1.0);
    return 2 * (std::numbers::pi - std::acos(c)) * weight(r);
  };
  using boost::math::quadrature::gauss_kronrod;
  const double num = gauss_kronrod<double, 61>::integrate(inside, 0.0, eps, 20, 1e-13);
  const double den = gauss_kronrod<double, 61>::integrate(weight, 0.0, eps, 20, 1e-13) * 2 * std::numbers::pi;
  return num / den;
}

}  // namespace

TEST_CASE("normalization constants") {
  CHECK(normalization_constant(1, 1.0) == doctest::Approx(kC1).epsilon(1e-10));
  CHECK(normalization_constant(2, 1.0) == doctest::Approx(kC2).epsilon(1e-10));
  CHECK(normalization_constant(3, 1.0) == doctest::Approx(kC3).epsilon(1e-10));
  CHECK(unit_bump_integral(1) == doctest::Approx(kI1).epsilon(1e-11));
  CHECK(unit_bump_integral(2) == doctest::Approx(kI2).epsilon(1e-11));
  CHECK(unit_bump_integral(3) == doctest::Approx(kI3).epsilon(1e-11));
  for (int n = 1; n <= 4; ++n)
    CHECK(normalization_constant(n, 0.05) / normalization_constant(n, 0.1) == doctest::Approx(std::pow(2.0, n)));
  CHECK_THROWS_AS(normalization_constant(2, 0.0), std::invalid_argument);
}

TEST_CASE("mollifier integrates to one under independent quadrature") {
  using boost::math::quadrature::gauss_kronrod;
  using boost::math::quadrature::tanh_sinh;
  const double eps = 0.3;

  const auto s1 = MollifierSpec::make(1, eps);
  auto f1 = [&](double x) { return omega(s1, (Vec(1) << x).finished()); };
  CHECK(std::abs(tanh_sinh<double>().integrate(f1, -eps, eps) - 1.0) <= 1e-6);

  const auto s2 = MollifierSpec::make(2, eps);
  auto inner = [&](double x) {
    const double h = std::sqrt(std::max(0.0, eps * eps - x * x));
    if (h == 0.0) return 0.0;
    return gauss_kronrod<double, 31>::integrate([&](double y) { return omega(s2, v2(x, y)); }, -h, h, 15, 1e-12);
  };
  CHECK(std::abs(gauss_kronrod<double, 31>::integrate(inner, -eps, eps, 15, 1e-11) - 1.0) <= 1e-6);

  const auto s3 = MollifierSpec::make(3, eps);
  auto shell = [&](double r) {
    return 4 * std::numbers::pi * r * r * omega(s3, (Vec(3) << r, 0, 0).finished());
  };
  CHECK(std::abs(tanh_sinh<double>().integrate(shell, 0.0, eps) - 1.0) <= 1e-4);
}

TEST_CASE("omega examples") {
  const auto spec = MollifierSpec::make(2, 0.5);
  CHECK(omega(spec, v2(0, 0)) == doctest::Approx(spec.c_eps * std::exp(-1.0)).epsilon(1e-15));
  CHECK(omega(spec, v2(0.5, 0)) == 0.0);
  CHECK(omega(spec, v2(0.3, 0.4)) == 0.0);
  CHECK(omega(spec, v2(1, 1)) == 0.0);
  RandomStream rng(1);
  for (int i = 0; i < 50; ++i) {
    const Vec x = random_in_ball(rng, 2, 0.5);
    CHECK(omega(spec, x) == omega(spec, -x));
    CHECK(omega(spec, x) >= 0.0);
  }
}

TEST_CASE("omega gradient matches finite differences in z") {
  for (int n = 1; n <= 3; ++n) {
    const auto spec = MollifierSpec::make(n, 0.4);
    RandomStream rng(10 + n);
    for (int trial = 0; trial < 40; ++trial) {
      const Vec u = random_in_ball(rng, n, 0.3);  // u = x - z
      const Vec g = omega_gradient(spec, u);
      Vec fd(n);
      const double h = 1e-6;
      for (int j = 0; j < n; ++j) {
        Vec up = u, um = u;
        up(j) -= h;  // z_j + h
        um(j) += h;  // z_j - h
        fd(j) = (omega(spec, up) - omega(spec, um)) / (2 * h);
      }
      CHECK((g - fd).norm() <= 1e-6 * std::max(g.norm(), 1.0));
    }
    CHECK(omega_gradient(spec, Vec::Zero(n)).norm() == 0.0);
  }
}

TEST_CASE("omega derivatives vanish at the cutoff") {
  const auto spec = MollifierSpec::make(2, 0.2);
  const Vec near = v2(0.999999 * 0.2, 0);
  CHECK(std::abs(omega(spec, near)) <= 1e-300);
  CHECK(omega_gradient(spec, near).norm() <= 1e-300);
  CHECK(omega_hessian(spec, near).norm() <= 1e-300);
  CHECK(omega_gradient(spec, v2(0.2, 0)).norm() == 0.0);
  CHECK(omega_hessian(spec, v2(0, 0.25)).norm() == 0.0);
}

TEST_CASE("omega hessian") {
  const double eps = 0.4;
  const auto spec = MollifierSpec::make(2, eps);
  const Mat h0 = omega_hessian(spec, Vec::Zero(2));
  const double diag = -(2 / (eps * eps)) * spec.c_eps * std::exp(-1.0);
  CHECK(h0(0, 0) == doctest::Approx(diag).epsilon(1e-14));
  CHECK(h0(1, 1) == doctest::Approx(diag).epsilon(1e-14));
  CHECK(h0(0, 1) == 0.0);

  for (int n = 1; n <= 3; ++n) {
    const auto s = MollifierSpec::make(n, eps);
    RandomStream rng(20 + n);
    for (int trial = 0; trial < 40; ++trial) {
      const Vec u = random_in_ball(rng, n, 0.3);
      const Mat h = omega_hessian(s, u);
      CHECK(h == h.transpose());
      Mat fd(n, n);
      const double step = 1e-5;
      for (int j = 0; j < n; ++j) {
        Vec up = u, um = u;
        up(j) += step;
        um(j) -= step;
        fd.col(j) = (omega_gradient(s, up) - omega_gradient(s, um)) / (2 * step);
      }
      // omega_gradient is the z-derivative, i.e. minus the u-derivative.
      CHECK((h + fd).norm() <= 1e-5 * std::max(h.norm(), 1.0));
    }
  }
}

TEST_CASE("eta examples on the unit disk") {
  const SmoothedIndicator ind(ImplicitDomain::ball(Vec::Zero(2), 1.0), 0.1);
  CHECK(std::abs(ind.eta(v2(0, 0)) - 1.0) <= ind.quad_tol());
  CHECK(ind.eta(v2(1.5, 0)) == 0.0);
  CHECK(ind.eta(v2(0, -1.31)) == 0.0);

  const double oracle = disk_eta_oracle(1.0, 0.1, 1.2);
  CHECK(std::abs(oracle - 0.5) <= 0.02);
  for (double angle : {0.0, 0.3, 1.1, 2.5}) {
    const Vec x = 1.2 * v2(std::cos(angle), std::sin(angle));
    CHECK(std::abs(ind.eta(x) - oracle) <= ind.quad_tol());
  }
}

TEST_CASE("eta stays in [0, 1] and hits its plateaus exactly") {
  const auto domain = ImplicitDomain::ellipsoid(Vec::Zero(2), v2(1.5, 1.0));
  const SmoothedIndicator ind(domain, 0.1);
  RandomStream rng(7);
  for (int i = 0; i < 1000; ++i) {
    const Vec x = v2(4 * rng.uniform() - 2, 3 * rng.uniform() - 1.5);
    const double e = ind.eta(x);
    CHECK(e >= 0.0);
    CHECK(e <= 1.0);
  }
  for (const auto& s : domain.sample_offset_boundary(0.1 * rng.uniform(), 100, 3)) CHECK(ind.eta(s.point) == 1.0);
  for (const auto& s : domain.sample_offset_boundary(0.3 + rng.uniform(), 100, 4)) CHECK(ind.eta(s.point) == 0.0);
}

TEST_CASE("eta derivatives") {
  const auto domain = ImplicitDomain::ball(Vec::Zero(2), 1.0);
  const double eps = 0.1;
  const SmoothedIndicator ind(domain, eps);

  const auto deep = ind.evaluate(v2(0.2, -0.1));
  CHECK(deep.gradient.norm() <= ind.quad_tol());
  CHECK(deep.hessian.norm() <= ind.quad_tol());

  // Radial gradient: compare with the derivative of the polar oracle.
  for (double angle : {0.0, 0.4, 0.9}) {
    const Vec dir = v2(std::cos(angle), std::sin(angle));
    const Vec g = ind.eta_gradient(1.2 * dir);
    const Vec tangent = v2(-dir(1), dir(0));
    CHECK(std::abs(g.dot(tangent)) <= ind.quad_tol());
    const double h = 1e-4;
    const double radial = (disk_eta_oracle(1.0, eps, 1.2 + h) - disk_eta_oracle(1.0, eps, 1.2 - h)) / (2 * h);
    CHECK(g.dot(dir) == doctest::Approx(radial).epsilon(0.02));
  }

  // Finite differences of eta at shell points.
  RandomStream rng(11);
  for (int i = 0; i < 30; ++i) {
    const double r = 1.0 + eps * (1 + 2 * rng.uniform());
    const double a = 2 * std::numbers::pi * rng.uniform();
    const Vec x = r * v2(std::cos(a), std::sin(a));
    const auto e = ind.evaluate(x);
    const double h = 1e-6;
    Vec fd(2);
    Mat fdh(2, 2);
    for (int j = 0; j < 2; ++j) {
      Vec xp = x, xm = x;
      xp(j) += h;
      xm(j) -= h;
      fd(j) = (ind.eta(xp) - ind.eta(xm)) / (2 * h);
      fdh.col(j) = (ind.eta_gradient(xp) - ind.eta_gradient(xm)) / (2 * h);
    }
    CHECK((e.gradient - fd).norm() <= 1e-3 * std::max(e.gradient.norm(), 1.0));
    CHECK((e.hessian - fdh).norm() <= 1e-3 * std::max(e.hessian.norm(), 1.0));
    CHECK(e.value == ind.eta(x));
  }
}

TEST_CASE("eta in three dimensions") {
  const SmoothedIndicator ind(ImplicitDomain::ball(Vec::Zero(3), 1.0), 0.2);
  CHECK(std::abs(ind.eta(Vec::Zero(3)) - 1.0) <= ind.quad_tol());
  CHECK(ind.eta((Vec(3) << 0, 0, 1.7).finished()) == 0.0);
  const double mid = ind.eta((Vec(3) << 0, 1.4, 0).finished());
  CHECK(mid > 0.4);
  CHECK(mid < 0.5);
}

TEST_CASE("derivative scaling across eps") {
  const auto domain = ImplicitDomain::ball(Vec::Zero(2), 1.0);
  std::vector<double> scaled;
  for (double eps : {0.2, 0.1, 0.05}) {
    const SmoothedIndicator ind(domain, eps);
    double best = 0.0;
    for (int i = 0; i <= 40; ++i) {
      const double r = 1.0 + eps * (1.0 + 2.0 * i / 40.0);
      best = std::max(best, ind.eta_gradient(v2(r * std::cos(0.37), r * std::sin(0.37))).norm());
    }
    scaled.push_back(best * eps);
  }
  const auto [lo, hi] = std::minmax_element(scaled.begin(), scaled.end());
  CHECK(*hi / *lo <= 1.2);
}

TEST_CASE("expected eta and the boundary-layer gap") {
  const auto domain = ImplicitDomain::ball(Vec::Zero(2), 1.0);
  const SmoothedIndicator ind(domain, 0.1);
  std::vector<Vec> inside{v2(0, 0), v2(0.3, 0.2), v2(-0.5, 0.1)};
  std::vector<Vec> outside{v2(2, 0), v2(0, -3), v2(1.5, 1.5)};
  CHECK(std::abs(ind.expected_eta(inside) - 1.0) <= ind.quad_tol());
  CHECK(ind.expected_eta(outside) == 0.0);
  std::vector<Vec> mixed = inside;
  mixed.insert(mixed.end(), outside.begin(), outside.end());
  CHECK(std::abs(ind.expected_eta(mixed) - 0.5) <= ind.quad_tol());

  // l_eps = E eta - P(in K) on a cloud straddling the boundary shrinks with eps.
  RandomStream rng(99);
  std::vector<Vec> cloud;
  double in_k = 0;
  for (int i = 0; i < 400; ++i) {
    cloud.push_back(random_in_ball(rng, 2, 1.5));
    in_k += cloud.back().norm() <= 1.0;
  }
  in_k /= cloud.size();
  double previous = 1.0;
  for (double eps : {0.2, 0.1, 0.05}) {
    const SmoothedIndicator e(domain, eps);
    const double l = e.expected_eta(cloud) - in_k;
    CHECK(l >= -e.quad_tol());
    CHECK(l <= previous);
    previous = l;
  }
}
