#pragma once

#include "eipass/linalg.hpp"
#include "eipass/model.hpp"

#include <string>
#include <vector>

namespace eipass {

/// Linearized electromagnetic subsystem at an equilibrium
///   tau xi' = A xi + B delta,   P = C xi + L delta
/// with xi = [E_q; E_d] of the two-axis machines and delta all angles.
struct LinearModel {
  Vector tau;  ///< [tau_d; tau_q]
  Matrix A;
  Matrix B;
  Matrix C;
  Matrix L;
  Matrix Ahat;
  Matrix Bhat;
  /// L - C A^{-1} B; empty when A is singular.
  Matrix L0;
  bool L0_defined = false;
  SystemState at;

  Eigen::Index angle_count() const { return L.rows(); }
  Eigen::Index flux_count() const { return A.rows(); }
};

/// Builds the linear model from the analytic Jacobians of g and P.
LinearModel linearize(const SystemModel& model, const SystemState& z_star);

struct TransferValue {
  CMatrix Hhat;  ///< -C (s tau - A)^{-1} B - L
  CMatrix H;     ///< -Hhat / s
};

/// Throws SingularityError when s is (numerically) a pole.
TransferValue transfer_eval(const LinearModel& lm, Complex s);

enum class FreqProperty { PositiveReal, NegativeImaginary };

struct FreqSample {
  double omega = 0.0;
  double lambda_min = 0.0;
};

struct FreqCertificate {
  FreqProperty property = FreqProperty::NegativeImaginary;
  bool verdict = false;
  double worst_omega = 0.0;
  double worst_lambda = 0.0;
  /// Largest tolerance used on the grid (1e-8 scaled by the matrix norm).
  double tolerance = 0.0;
  /// Positive real only: L0 symmetric and PSD after deflation.
  bool residue_check = true;
  std::string reason;
  std::vector<FreqSample> samples;
};

/// `points` logarithmically spaced frequencies over [w_min, w_max].
Vector log_frequency_grid(double w_min = 1e-3, double w_max = 1e4, std::size_t points = 400);

/// Checks lambda_min(j (Hhat(jw) - Hhat(jw)^H)) >= -tol on the grid. Requires
/// Hhat to be stable (eig(tau^{-1} A) in the open left half plane); otherwise
/// the verdict is false with reason "unstable Hhat".
FreqCertificate certify_negative_imaginary(const LinearModel& lm, const Vector& grid);

/// Checks H(jw) + H(jw)^H >= -tol on the grid and the residue L0 at the origin.
FreqCertificate certify_positive_real(const LinearModel& lm, const Vector& grid);

struct TorqueCoefficients {
  Matrix L0;
  double sym_gap = 0.0;  ///< max |L0 - L0^T|
  CVector deflated_eigs;
  double positive_eig_product = 1.0;
};

/// Throws SingularityError when L0 is undefined.
TorqueCoefficients torque_coefficient_matrix(const LinearModel& lm);

}  // namespace eipass
