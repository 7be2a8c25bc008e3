// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/bessel.hpp>

#include "viability/generator_probe.hpp"
#include "viability/mc_simulator.hpp"
#include "viability/mollifier.hpp"
#include "viability/rng.hpp"
#include "viability/run_config.hpp"
#include "viability/runner.hpp"
#include "viability/theorem_checker.hpp"

using namespace viability;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "FAILED ") + what;
  }
};

std::string fmt(const char* format, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

Vec point_in_ball(RandomStream& rng, int n, double radius) {
  while (true) {
    Vec x(n);
    for (int i = 0; i < n; ++i) x(i) = radius * (2 * rng.uniform() - 1);
    if (x.norm() < radius) return x;
  }
}

Vec on_circle(double radius, double angle) { return radius * v2(std::cos(angle), std::sin(angle)); }

// --- 1 ----------------------------------------------------------------------
Outcome mollifier_normalization() {
  using boost::math::quadrature::gauss_kronrod;
  using boost::math::quadrature::tanh_sinh;
  // 30-digit reference constants for eps = 1
  const double frozen[] = {2.25228362104358101050, 2.14356577579223660100, 2.26711673960832645842};
  Outcome o;
  for (int n = 1; n <= 3; ++n) {
    const double tol = n <= 2 ? 1e-6 : 1e-4;
    for (double eps : {0.25, 1.0}) {
      const auto spec = MollifierSpec::make(n, eps);
      auto w = [&](const Vec& x) { return omega(spec, x); };
      // scheme A: radial tanh-sinh
      const double area = 2 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
      auto radial = [&](double r) {
        Vec x = Vec::Zero(n);
        x(0) = r;
        return area * std::pow(r, n - 1) * w(x);
      };
      const double a = tanh_sinh<double>().integrate(radial, 0.0, eps);
      // scheme B: Cartesian nested Gauss-Kronrod
      std::function<double(Vec&, int)> nest = [&](Vec& x, int axis) -> double {
        if (axis == n) return w(x);
        double used = 0.0;
        for (int i = 0; i < axis; ++i) used += x(i) * x(i);
        const double h = std::sqrt(std::max(0.0, eps * eps - used));
        if (h == 0.0) return 0.0;
        auto f = [&](double t) {
          x(axis) = t;
          const double v = nest(x, axis + 1);
          x(axis) = 0.0;
          return v;
        };
        return gauss_kronrod<double, 21>::integrate(f, -h, h, n == 3 ? 6 : 15, n == 3 ? 1e-7 : 1e-12);
      };
      Vec x = Vec::Zero(n);
      const double b = nest(x, 0);
      o.require(std::abs(a - 1) <= tol && std::abs(b - 1) <= tol,
                fmt("n=%d eps=%.2f |A-1|=%.1e |B-1|=%.1e", n, eps, std::abs(a - 1), std::abs(b - 1)));
    }
    o.require(std::abs(normalization_constant(n, 1.0) / frozen[n - 1] - 1) <= 1e-10, fmt("c_%d matches reference", n));
  }
  return o;
}

// --- 2 ----------------------------------------------------------------------
Outcome eta_plateaus() {
  const auto domain = ImplicitDomain::ball(Vec::Zero(2), 1.0);
  const double eps = 0.05;
  const SmoothedIndicator ind(domain, eps);
  RandomStream rng(2024);
  Outcome o;

  double worst_inner = 0.0;
  for (int i = 0; i < 100; ++i) {
    Vec x;
    do x = point_in_ball(rng, 2, 1.0 + eps); while (domain.signed_distance(x) > eps);
    worst_inner = std::max(worst_inner, std::abs(ind.eta(x) - 1.0));
  }
  o.require(worst_inner <= 2e-3, fmt("K_eps max|eta-1|=%.1e", worst_inner));

  int nonzero = 0;
  for (int i = 0; i < 100; ++i) {
    const double r = 1.0 + 3 * eps + 1e-9 + 0.5 * rng.uniform();
    nonzero += ind.eta(on_circle(r, 2 * std::numbers::pi * rng.uniform())) != 0.0;
  }
  o.require(nonzero == 0, fmt("beyond K_3eps nonzero=%d", nonzero));

  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double e = ind.eta(v2(2.6 * rng.uniform() - 1.3, 2.6 * rng.uniform() - 1.3));
    lo = std::min(lo, e);
    hi = std::max(hi, e);
  }
  o.require(lo >= -1e-12 && hi <= 1 + 1e-12, fmt("range [%.3g, %.3g]", lo, hi));

  std::vector<double> scaled;
  for (double e : {0.2, 0.1, 0.05}) {
    const SmoothedIndicator s(domain, e);
    double best = 0.0;
    for (const Vec& x : sample_shell(domain, e, 200, 77)) best = std::max(best, s.eta_gradient(x).norm());
    scaled.push_back(best * e);
  }
  const double ratio = *std::max_element(scaled.begin(), scaled.end()) / *std::min_element(scaled.begin(), scaled.end());
  o.require(ratio <= 2.0, fmt("eps*max|grad eta| = %.3f %.3f %.3f (ratio %.3f)", scaled[0], scaled[1], scaled[2], ratio));
  return o;
}

// --- 3 ----------------------------------------------------------------------
Outcome derivative_correctness() {
  Outcome o;
  const double eps = 0.3;
  const auto spec = MollifierSpec::make(2, eps);
  RandomStream rng(3);
  double worst_g = 0.0, worst_h = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Vec u = point_in_ball(rng, 2, 0.95 * eps);
    const Vec g = omega_gradient(spec, u);
    const Mat h = omega_hessian(spec, u);
    Vec fd_g(2);
    Mat fd_h(2, 2);
    const double step = 1e-6 * eps;
    for (int j = 0; j < 2; ++j) {
      Vec p = u, m = u;
      p(j) += step;
      m(j) -= step;
      // omega_gradient is d/dz of omega(x - z) = -d/du
      fd_g(j) = -(omega(spec, p) - omega(spec, m)) / (2 * step);
      fd_h.col(j) = -(omega_gradient(spec, p) - omega_gradient(spec, m)) / (2 * step);
    }
    if (g.norm() > 0) worst_g = std::max(worst_g, (g - fd_g).norm() / g.norm());
    worst_h = std::max(worst_h, (h - fd_h).norm() / h.norm());
  }
  o.require(worst_g <= 1e-6, fmt("omega grad rel err %.1e", worst_g));
  o.require(worst_h <= 1e-5, fmt("omega hess rel err %.1e", worst_h));

  const auto domain = ImplicitDomain::ball(Vec::Zero(2), 1.0);
  const SmoothedIndicator ind(domain, 0.1);
  double worst_eta = 0.0;
  for (const Vec& x : sample_shell(domain, 0.1, 20, 31)) {
    const Vec g = ind.eta_gradient(x);
    // Five-point stencil: near the inner plateau |grad eta| falls to ~1e-8 while
    // eta ~ 1, so the step must stay large enough to beat rounding in eta.
    Vec fd(2);
    const double step = 5e-5;
    for (int j = 0; j < 2; ++j) {
      auto f = [&](double s) {
        Vec p = x;
        p(j) += s;
        return ind.eta(p);
      };
      fd(j) = (8 * (f(step) - f(-step)) - (f(2 * step) - f(-2 * step))) / (12 * step);
    }
    worst_eta = std::max(worst_eta, (g - fd).norm() / g.norm());
  }
  o.require(worst_eta <= 1e-3, fmt("eta grad rel err %.1e", worst_eta));
  return o;
}

// --- 4 ----------------------------------------------------------------------
Outcome theorem_positive() {
  Outcome o;
  const auto report =
      theorem1_report(SdeModel::rotational(2, 1.0, 1.0), ImplicitDomain::ball(Vec::Zero(2), 1.0), CheckerConfig{});
  double worst2 = 0.0;
  for (double v : report.cond2_sup) worst2 = std::max(worst2, v);
  o.require(worst2 <= 1e-10, fmt("max cond2_sup %.1e", worst2));
  const double eps = report.eps_grid.back();
  const double err = std::abs(report.cond3_sup.back() + (1 + eps) / 2);
  o.require(eps == 0.025 && err <= 1e-2, fmt("cond3_sup(0.025)=%.6f vs %.6f", report.cond3_sup.back(), -(1 + eps) / 2));
  o.require(report.prediction == Prediction::Predicted, "prediction " + to_string(report.prediction));
  return o;
}

// --- 5 ----------------------------------------------------------------------
Outcome theorem_negative() {
  Outcome o;
  const auto report = theorem1_report(SdeModel::brownian(2, 1.0), ImplicitDomain::ball(Vec::Zero(2), 1.0), CheckerConfig{});
  // dense oracle: max_j |nu_j| over 1e5 equally spaced circle normals
  double oracle = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double a = 2 * std::numbers::pi * i / 100000;
    oracle = std::max({oracle, std::abs(std::cos(a)), std::abs(std::sin(a))});
  }
  std::string values;
  bool in_range = true;
  for (double v : report.cond2_sup) {
    in_range = in_range && v >= 0.95 && v <= 1.0;
    values += fmt("%.6f ", v);
  }
  o.require(in_range, "cond2_sup " + values + fmt("(oracle %.6f)", oracle));
  o.require(report.prediction == Prediction::NotPredicted, "prediction " + to_string(report.prediction));
  return o;
}

// --- 6 ----------------------------------------------------------------------
Outcome shell_probe() {
  Outcome o;
  const SmoothedIndicator ind(ImplicitDomain::ball(Vec::Zero(2), 1.0), 0.1);
  const auto rot = shell_sign_check(SdeModel::rotational(2, 1.0, 1.0), ind, 0.0, 200, 1);
  o.require(rot.pass, fmt("rotational min %.3e >= -%.3e", rot.min_value, rot.tolerance_used));
  const auto outward = SdeModel::linear(Mat::Identity(2, 2), Vec::Zero(2), {}, {});
  const auto out = shell_sign_check(outward, ind, 0.0, 200, 1);
  o.require(!out.pass, fmt("outward min %.3e < -%.3e", out.min_value, out.tolerance_used));
  return o;
}

// --- 7 ----------------------------------------------------------------------
double disk_exit_probability(double t) {
  double survive = 0.0;
  for (unsigned k = 1; k <= 30; ++k) {
    const double j = boost::math::cyl_bessel_j_zero(0.0, k);
    survive += 2.0 / (j * boost::math::cyl_bessel_j(1, j)) * std::exp(-j * j * t / 2.0);
  }
  return 1.0 - survive;
}

Outcome monte_carlo() {
  Outcome o;
  const auto disk = ImplicitDomain::ball(Vec::Zero(2), 1.0);
  const auto rot = SdeModel::rotational(2, 1.0, 1.0);
  const auto coarse = exit_probability(rot, disk, v2(0.5, 0), 1.0, 1e-3, 10000, 7);
  const auto fine = exit_probability(rot, disk, v2(0.5, 0), 1.0, 1e-4, 10000, 7);
  o.require(coarse.p_hat <= 1e-3, fmt("rotational p_hat(1e-3)=%.4f", coarse.p_hat));
  const bool non_increasing = fine.p_hat <= coarse.p_hat || fine.ci_low <= coarse.ci_high;
  o.require(non_increasing, fmt("p_hat(1e-4)=%.4f", fine.p_hat));

  const auto brown = SdeModel::brownian(2, 1.0);
  const auto est = exit_probability(brown, disk, Vec::Zero(2), 1.0, 1e-3, 10000, 11);
  const auto ref = exit_probability(brown, disk, Vec::Zero(2), 1.0, 1e-5, 10000, 13);
  const double series = disk_exit_probability(1.0);
  o.require(est.ci_low > 0.05 || est.ci_high < 0.05,
            fmt("brownian p_hat=%.4f CI [%.4f, %.4f]", est.p_hat, est.ci_low, est.ci_high));
  o.require(std::abs(ref.p_hat - series) <= 0.01, fmt("dt=1e-5 reference %.4f, Bessel series %.4f", ref.p_hat, series));
  return o;
}

// --- 8 ----------------------------------------------------------------------
Outcome lemma_and_statement5() {
  Outcome o;
  const auto disk = ImplicitDomain::ball(Vec::Zero(2), 1.0);
  const SmoothedIndicator ind(disk, 0.1);
  const auto gap = lemma1_gap(SdeModel::rotational(2, 1.0, 1.0), ind, InitialLaw{Vec::Zero(2), 0.95}, 1.0, 1e-3, 5000, 3);
  o.require(gap.gap >= -3 * gap.std_error, fmt("lemma gap %.2e (se %.2e)", gap.gap, gap.std_error));

  RandomStream rng(5);
  std::vector<Vec> deep, far, shell;
  for (int i = 0; i < 200; ++i) {
    deep.push_back(point_in_ball(rng, 2, 0.8));
    far.push_back(on_circle(1.35 + rng.uniform(), 2 * std::numbers::pi * rng.uniform()));
    shell.push_back(on_circle(1.0 + 0.3 * rng.uniform(), 2 * std::numbers::pi * rng.uniform()));
  }
  for (const auto* cloud : {&deep, &far, &shell}) {
    const double g = statement5_gap(ind, *cloud);
    o.require(g >= -ind.quad_tol(), fmt("l_eps %.4f", g));
  }
  std::vector<double> trend;
  for (double eps : {0.1, 0.05, 0.025}) trend.push_back(statement5_gap(SmoothedIndicator(disk, eps), shell));
  o.require(trend[0] > trend[1] && trend[1] > trend[2], fmt("shell l_eps %.4f > %.4f > %.4f", trend[0], trend[1], trend[2]));
  return o;
}

// --- 9 ----------------------------------------------------------------------
std::string report_without_timestamp(const std::filesystem::path& file) {
  std::ifstream in(file);
  std::string out;
  for (std::string line; std::getline(in, line);)
    if (line.find("\"generated_at\"") == std::string::npos) out += line + "\n";
  return out;
}

Outcome determinism() {
  Outcome o;
  const RunConfig cfg = load_config(std::string(VIABILITY_SOURCE_DIR) + "/configs/rotational_disk.json");
  const auto root = std::filesystem::temp_directory_path() / "viability_acceptance_determinism";
  std::filesystem::remove_all(root);
  std::vector<std::string> reports;
  for (auto [tag, threads] : {std::pair{"a", 1u}, std::pair{"b", 1u}, std::pair{"c", 4u}}) {
    const auto dir = root / tag;
    write_outputs(run(cfg, Subcommand::Full, ExecPolicy{threads}).report, dir, true);
    reports.push_back(report_without_timestamp(dir / "report.json"));
  }
  o.require(!reports[0].empty() && reports[0] == reports[1], "repeat run identical");
  o.require(reports[0] == reports[2], "1 vs 4 threads identical");
  return o;
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;  // 0 = no stated limit
  Outcome (*fn)();
};

}  // namespace

int main() {
  const Criterion criteria[] = {
      {1, "mollifier normalization", 10, mollifier_normalization},
      {2, "smoothed indicator plateaus and bounds", 0, eta_plateaus},
      {3, "derivative correctness", 60, derivative_correctness},
      {4, "invariance conditions hold (rotational)", 0, theorem_positive},
      {5, "invariance conditions fail (brownian)", 0, theorem_negative},
      {6, "generator shell probe", 300, shell_probe},
      {7, "Monte Carlo cross-check", 600, monte_carlo},
      {8, "expectation gap and boundary layer", 0, lemma_and_statement5},
      {9, "determinism of full runs", 0, determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_seconds > 0) o.require(seconds <= c.budget_seconds, fmt("runtime %.1fs <= %.0fs", seconds, c.budget_seconds));
    std::printf("[%s] criterion %d: %s (%.1fs) -- %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, seconds, o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  }
  std::printf("%d of %zu acceptance criteria passed\n", static_cast<int>(std::size(criteria)) - failures,
              std::size(criteria));
  return failures == 0 ? 0 : 1;
}
