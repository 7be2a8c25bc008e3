#include "viability/sde_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "viability/errors.hpp"
#include "viability/rng.hpp"

namespace viability {

std::string to_string(ModelFamily family) {
  switch (family) {
    case ModelFamily::Brownian: return "brownian";
    case ModelFamily::OuInward: return "ou_inward";
    case ModelFamily::Rotational: return "rotational";
    case ModelFamily::Linear: return "linear";
  }
  return "unknown";
}

namespace {

void require_dimension(int n) {
  if (n < 1) throw std::invalid_argument("model dimension must be positive");
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be finite");
}

}  // namespace

SdeModel SdeModel::brownian(int n, double scale) {
  require_dimension(n);
  require_finite(scale, "brownian scale");
  SdeModel m(ModelFamily::Brownian, n);
  m.p0_ = scale;
  return m;
}

SdeModel SdeModel::ou_inward(int n, double rate) {
  require_dimension(n);
  require_finite(rate, "ou rate");
  SdeModel m(ModelFamily::OuInward, n);
  m.p0_ = rate;
  return m;
}

SdeModel SdeModel::rotational(int n, double spin, double inward_rate) {
  if (n < 2) throw std::invalid_argument("rotational model needs dimension >= 2");
  require_finite(spin, "spin");
  require_finite(inward_rate, "inward rate");
  SdeModel m(ModelFamily::Rotational, n);
  m.p0_ = spin;
  m.p1_ = inward_rate;
  return m;
}

SdeModel SdeModel::linear(Mat drift_matrix, Vec drift_offset, std::vector<Mat> noise_matrices,
                          std::vector<Vec> noise_offsets) {
  const auto n = drift_matrix.rows();
  require_dimension(static_cast<int>(n));
  if (drift_matrix.cols() != n || drift_offset.size() != n)
    throw std::invalid_argument("linear drift must be n x n with an n-vector offset");
  if (noise_matrices.empty()) noise_matrices.assign(n, Mat::Zero(n, n));
  if (noise_offsets.empty()) noise_offsets.assign(n, Vec::Zero(n));
  if (static_cast<Eigen::Index>(noise_matrices.size()) != n || static_cast<Eigen::Index>(noise_offsets.size()) != n)
    throw std::invalid_argument("linear model needs exactly n noise matrices and offsets");
  for (std::size_t k = 0; k < noise_matrices.size(); ++k) {
    if (noise_matrices[k].rows() != n || noise_matrices[k].cols() != n || noise_offsets[k].size() != n)
      throw std::invalid_argument("noise matrix/offset has the wrong shape");
    if (!noise_matrices[k].allFinite() || !noise_offsets[k].allFinite())
      throw std::invalid_argument("noise coefficients must be finite");
  }
  if (!drift_matrix.allFinite() || !drift_offset.allFinite())
    throw std::invalid_argument("drift coefficients must be finite");

  SdeModel m(ModelFamily::Linear, static_cast<int>(n));
  m.drift_matrix_ = std::move(drift_matrix);
  m.drift_offset_ = std::move(drift_offset);
  m.noise_matrices_ = std::move(noise_matrices);
  m.noise_offsets_ = std::move(noise_offsets);

  // Self-test of the analytic Jacobian against central differences.
  RandomStream rng(0x11EA4u);
  for (int trial = 0; trial < 3; ++trial) {
    Vec x(n);
    for (Eigen::Index i = 0; i < n; ++i) x(i) = 2.0 * rng.uniform() - 1.0;
    const auto analytic = m.diffusion_jacobian(0.0, x);
    const auto numeric = finite_difference_diffusion_jacobian(m, 0.0, x);
    for (Eigen::Index k = 0; k < n; ++k) {
      const double scale = std::max(1.0, analytic[k].cwiseAbs().maxCoeff());
      if ((analytic[k] - numeric[k]).cwiseAbs().maxCoeff() > 1e-8 * scale)
        throw Error("linear model Jacobian self-test failed");
    }
  }
  return m;
}

SdeModel SdeModel::zero(int n) {
  require_dimension(n);
  return linear(Mat::Zero(n, n), Vec::Zero(n), {}, {});
}

void SdeModel::drift_into(double /*t*/, const Vec& x, Vec& out) const {
  switch (family_) {
    case ModelFamily::Brownian: out.setZero(); break;
    case ModelFamily::OuInward: out = -p0_ * x; break;
    case ModelFamily::Rotational: out = -p1_ * x; break;
    case ModelFamily::Linear: out.noalias() = drift_matrix_ * x; out += drift_offset_; break;
  }
}

void SdeModel::diffusion_into(double /*t*/, const Vec& x, Mat& out) const {
  switch (family_) {
    case ModelFamily::Brownian:
      out.setZero();
      out.diagonal().setConstant(p0_);
      break;
    case ModelFamily::OuInward: out.setZero(); break;
    case ModelFamily::Rotational:
      out.setZero();
      out(0, 0) = -p0_ * x(1);
      out(0, 1) = p0_ * x(0);
      break;
    case ModelFamily::Linear:
      for (int k = 0; k < n_; ++k) out.row(k).noalias() = (noise_matrices_[k] * x + noise_offsets_[k]).transpose();
      break;
  }
}

Vec SdeModel::drift(double t, const Vec& x) const {
  Vec out(n_);
  drift_into(t, x, out);
  return out;
}

Mat SdeModel::diffusion(double t, const Vec& x) const {
  Mat out(n_, n_);
  diffusion_into(t, x, out);
  return out;
}

Mat SdeModel::sigma(double t, const Vec& x) const {
  const Mat b = diffusion(t, x);
  return b.transpose() * b;
}

std::vector<Mat> SdeModel::diffusion_jacobian(double /*t*/, const Vec& /*x*/) const {
  std::vector<Mat> jac(n_, Mat::Zero(n_, n_));
  switch (family_) {
    case ModelFamily::Brownian:
    case ModelFamily::OuInward: break;
    case ModelFamily::Rotational:
      jac[0](0, 1) = -p0_;
      jac[0](1, 0) = p0_;
      break;
    case ModelFamily::Linear:
      for (int k = 0; k < n_; ++k) jac[k] = noise_matrices_[k];
      break;
  }
  return jac;
}

std::vector<Mat> finite_difference_diffusion_jacobian(const SdeModel& model, double t, const Vec& x) {
  const int n = model.dimension();
  const double h = 1e-6 * (1.0 + x.norm());
  std::vector<Mat> jac(n, Mat::Zero(n, n));
  for (int j = 0; j < n; ++j) {
    Vec xp = x;
    Vec xm = x;
    xp(j) += h;
    xm(j) -= h;
    const Mat diff = (model.diffusion(t, xp) - model.diffusion(t, xm)) / (2.0 * h);
    for (int k = 0; k < n; ++k) jac[k].col(j) = diff.row(k).transpose();
  }
  return jac;
}

RegularityReport check_regularity(const SdeModel& model, double bound, const SampleBox& box, std::size_t pairs,
                                  std::uint64_t seed) {
  if (pairs < 1) throw std::invalid_argument("check_regularity needs at least one pair");
  const int n = model.dimension();
  if (box.lower.size() != n || box.upper.size() != n) throw std::invalid_argument("sample box dimension mismatch");

  RandomStream rng(seed);
  auto draw_point = [&] {
    Vec x(n);
    for (int i = 0; i < n; ++i) x(i) = box.lower(i) + (box.upper(i) - box.lower(i)) * rng.uniform();
    return x;
  };
  auto growth = [&](double s, const Vec& x) {
    const double a2 = model.drift(s, x).squaredNorm();
    const double b2 = model.diffusion(s, x).squaredNorm();  // sum_k |b_k|^2
    return (a2 + b2) / (1.0 + x.squaredNorm());
  };

  RegularityReport report;
  report.bound = bound;
  report.sample_count = pairs;
  for (std::size_t p = 0; p < pairs; ++p) {
    const Vec x = draw_point();
    const Vec y = draw_point();
    const double s = box.t_min + (box.t_max - box.t_min) * rng.uniform();
    const double dist = (x - y).norm();
    if (dist > 0.0) {
      const Mat bx = model.diffusion(s, x);
      const Mat by = model.diffusion(s, y);
      double lhs = (model.drift(s, x) - model.drift(s, y)).norm();
      for (int k = 0; k < n; ++k) lhs += (bx.row(k) - by.row(k)).norm();
      report.lipschitz_estimate = std::max(report.lipschitz_estimate, lhs / dist);
    }
    report.growth_estimate = std::max({report.growth_estimate, growth(s, x), growth(s, y)});
  }
  report.pass = report.lipschitz_estimate <= bound && report.growth_estimate <= bound * bound;
  return report;
}

}  // namespace viability
