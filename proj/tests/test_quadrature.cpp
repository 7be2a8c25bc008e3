#include <doctest.h>

#include <cmath>
#include <numbers>

#include "viability/errors.hpp"
#include "viability/quadrature.hpp"

using namespace viability;

TEST_CASE("Gauss-Legendre rule integrates polynomials of degree 2m-1 exactly") {
  for (int m : {1, 2, 5, 12, 24}) {
    const auto rule = quadrature::gauss_legendre(m);
    double wsum = 0.0;
    for (double w : rule.weights) wsum += w;
    CHECK(wsum == doctest::Approx(2.0).epsilon(1e-14));
    for (int k = 0; k <= 2 * m - 1; ++k) {
      double s = 0.0;
      for (int i = 0; i < m; ++i) s += rule.weights[i] * std::pow(rule.nodes[i], k);
      const double exact = k % 2 == 1 ? 0.0 : 2.0 / (k + 1);
      CHECK(s == doctest::Approx(exact).epsilon(1e-13));
    }
  }
}

TEST_CASE("nodes are symmetric and sorted") {
  const auto rule = quadrature::gauss_legendre(7);
  for (int i = 0; i < 7; ++i) CHECK(rule.nodes[i] == doctest::Approx(-rule.nodes[6 - i]));
  for (int i = 1; i < 7; ++i) CHECK(rule.nodes[i] > rule.nodes[i - 1]);
}

TEST_CASE("adaptive integration reaches tolerance on smooth and kinked integrands") {
  CHECK(quadrature::adaptive_gauss_legendre([](double x) { return std::exp(x); }, 0.0, 1.0, 1e-13) ==
        doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-13));
  CHECK(quadrature::adaptive_gauss_legendre([](double x) { return std::abs(x - 0.3); }, 0.0, 1.0, 1e-12) ==
        doctest::Approx(0.5 * (0.09 + 0.49)).epsilon(1e-11));
}

TEST_CASE("adaptive integration reports a stall") {
  const auto wild = [](double x) { return x > 0.0 ? 1.0 / x : 0.0; };
  CHECK_THROWS_AS(quadrature::adaptive_gauss_legendre(wild, 0.0, 1.0, 1e-12, 64), ToleranceNotMet);
}

TEST_CASE("Halton points lie in the unit cube and start with the radical inverse") {
  const auto p = quadrature::halton_point(1, 3);
  CHECK(p[0] == doctest::Approx(0.5));
  CHECK(p[1] == doctest::Approx(1.0 / 3.0));
  CHECK(p[2] == doctest::Approx(0.2));
  for (unsigned long i = 1; i < 200; ++i)
    for (double v : quadrature::halton_point(i, 6)) CHECK((v >= 0.0 && v < 1.0));
}
