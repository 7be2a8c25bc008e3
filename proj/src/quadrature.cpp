#include "viability/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <queue>
#include <stdexcept>

#include "viability/errors.hpp"

namespace viability::quadrature {

Rule gauss_legendre(int points) {
  if (points < 1) throw std::invalid_argument("Gauss-Legendre rule needs at least one node");
  Rule rule;
  rule.nodes.resize(points);
  rule.weights.resize(points);
  const int half = (points + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (points + 0.5));
    double derivative = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= points; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (points == 1) p0 = 1.0;
      derivative = points * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / derivative;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute P'_m at the converged root for the weight.
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= points; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    derivative = points * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * derivative * derivative);
    rule.nodes[i] = -x;
    rule.nodes[points - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[points - 1 - i] = w;
  }
  if (points % 2 == 1) rule.nodes[points / 2] = 0.0;
  return rule;
}

namespace {

struct Panel {
  double a;
  double b;
  double value;
  double error;
  bool operator<(const Panel& other) const { return error < other.error; }
};

double apply(const Rule& rule, const std::function<double(double)>& f, double a, double b) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
  return half * sum;
}

Panel make_panel(const Rule& rule, const std::function<double(double)>& f, double a, double b) {
  const double mid = 0.5 * (a + b);
  const double whole = apply(rule, f, a, b);
  const double split = apply(rule, f, a, mid) + apply(rule, f, mid, b);
  return {a, b, split, std::abs(split - whole)};
}

}  // namespace

double adaptive_gauss_legendre(const std::function<double(double)>& f, double a, double b, double abs_tol,
                               int max_intervals) {
  static const Rule rule = gauss_legendre(15);
  std::priority_queue<Panel> panels;
  panels.push(make_panel(rule, f, a, b));
  double total_error = panels.top().error;
  int count = 1;
  while (total_error > abs_tol) {
    if (count >= max_intervals) throw ToleranceNotMet("adaptive Gauss-Legendre stalled before reaching tolerance");
    const Panel worst = panels.top();
    panels.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) throw ToleranceNotMet("adaptive Gauss-Legendre exhausted resolution");
    Panel left = make_panel(rule, f, worst.a, mid);
    Panel right = make_panel(rule, f, mid, worst.b);
    total_error += left.error + right.error - worst.error;
    panels.push(left);
    panels.push(right);
    ++count;
  }
  double sum = 0.0;
  while (!panels.empty()) {
    sum += panels.top().value;
    panels.pop();
  }
  return sum;
}

std::vector<double> halton_point(unsigned long index, int dim) {
  static constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19};
  if (dim < 1 || dim > 8) throw std::invalid_argument("Halton sequence supports 1..8 dimensions");
  std::vector<double> point(dim);
  for (int d = 0; d < dim; ++d) {
    const int base = kPrimes[d];
    double f = 1.0;
    double r = 0.0;
    for (unsigned long i = index; i > 0; i /= base) {
      f /= base;
      r += f * static_cast<double>(i % base);
    }
    point[d] = r;
  }
  return point;
}

}  // namespace viability::quadrature
