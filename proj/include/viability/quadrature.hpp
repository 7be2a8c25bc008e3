#pragma once

#include <functional>
#include <vector>

namespace viability::quadrature {

/// Gauss-Legendre rule on [-1, 1].
struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Nodes are roots of P_m found by Newton iteration from Chebyshev guesses.
Rule gauss_legendre(int points);

/// Globally adaptive Gauss-Legendre on [a, b]: the interval with the largest
/// error estimate (|G_k(I) - G_k(left) - G_k(right)|) is bisected until the
/// summed estimate drops below abs_tol. Throws ToleranceNotMet on stall.
double adaptive_gauss_legendre(const std::function<double(double)>& f, double a, double b, double abs_tol,
                               int max_intervals = 4096);

/// Point `index` (1-based offsets recommended) of the Halton sequence in [0, 1)^dim.
std::vector<double> halton_point(unsigned long index, int dim);

}  // namespace viability::quadrature
