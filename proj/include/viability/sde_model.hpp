#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "viability/types.hpp"

namespace viability {

enum class ModelFamily { Brownian, OuInward, Rotational, Linear };

std::string to_string(ModelFamily family);

/// Ito SDE  d xi = a(t, xi) dt + sum_k b_k(t, xi) dw_k  with n noise channels.
///
/// Diffusion is stored as the matrix B with row k equal to b_k, so B(k, i) = b_ki
/// and sigma = B^T B. Built-in families are autonomous and C-infinity; the time
/// argument is carried through every call for inhomogeneous extensions.
///
///   brownian(scale):          a = 0,            b_k = scale e_k
///   ou_inward(rate):          a = -rate x,      b_k = 0
///   rotational(spin, rate):   a = -rate x,      b_1 = spin (-x_2, x_1, 0, ...), b_k = 0 for k > 1
///   linear(A, c, B_k, d_k):   a = A x + c,      b_k = B_k x + d_k
class SdeModel {
 public:
  static SdeModel brownian(int n, double scale);
  static SdeModel ou_inward(int n, double rate);
  static SdeModel rotational(int n, double spin, double inward_rate);
  /// Runs a finite-difference self-test of the analytic Jacobians (1e-8).
  static SdeModel linear(Mat drift_matrix, Vec drift_offset, std::vector<Mat> noise_matrices,
                         std::vector<Vec> noise_offsets);
  static SdeModel zero(int n);

  int dimension() const { return n_; }
  ModelFamily family() const { return family_; }

  double scale() const { return p0_; }
  double rate() const { return family_ == ModelFamily::Rotational ? p1_ : p0_; }
  double spin() const { return p0_; }
  const Mat& drift_matrix() const { return drift_matrix_; }
  const Vec& drift_offset() const { return drift_offset_; }
  const std::vector<Mat>& noise_matrices() const { return noise_matrices_; }
  const std::vector<Vec>& noise_offsets() const { return noise_offsets_; }

  Vec drift(double t, const Vec& x) const;
  /// B(t, x); row k is b_k(t, x).
  Mat diffusion(double t, const Vec& x) const;

  /// Allocation-free variants for the simulation loop; outputs must be presized.
  void drift_into(double t, const Vec& x, Vec& out) const;
  void diffusion_into(double t, const Vec& x, Mat& out) const;

  /// sigma = B^T B, sigma_ij = sum_k b_ki b_kj.
  Mat sigma(double t, const Vec& x) const;

  /// J[k](i, j) = d b_ki / d x_j.
  std::vector<Mat> diffusion_jacobian(double t, const Vec& x) const;

 private:
  SdeModel(ModelFamily family, int n) : family_(family), n_(n) {}

  ModelFamily family_;
  int n_;
  double p0_ = 0.0;
  double p1_ = 0.0;
  Mat drift_matrix_;
  Vec drift_offset_;
  std::vector<Mat> noise_matrices_;
  std::vector<Vec> noise_offsets_;
};

/// Central-difference Jacobian of the diffusion rows, step h = 1e-6 (1 + |x|).
std::vector<Mat> finite_difference_diffusion_jacobian(const SdeModel& model, double t, const Vec& x);

struct RegularityReport {
  double lipschitz_estimate = 0.0;
  double growth_estimate = 0.0;
  std::size_t sample_count = 0;
  double bound = 0.0;
  bool pass = false;
};

struct SampleBox {
  Vec lower;
  Vec upper;
  double t_min = 0.0;
  double t_max = 1.0;
};

/// Spot check of the global Lipschitz and linear-growth hypotheses on random
/// pairs drawn from the box. Sampling can only refute these bounds, never
/// establish them.
RegularityReport check_regularity(const SdeModel& model, double bound, const SampleBox& box, std::size_t pairs,
                                  std::uint64_t seed);

}  // namespace viability
