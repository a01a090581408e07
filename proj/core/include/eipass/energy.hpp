#pragma once

#include "eipass/linalg.hpp"
#include "eipass/model.hpp"

#include <optional>

namespace eipass {

/// Coordinates of the strain energy: [delta (all machines) | E_q | E_d (two-axis)].
Vector energy_coordinates(const SystemModel& model, const SystemState& state);

/// Inverse of energy_coordinates with the given omega.
SystemState state_from_coordinates(const SystemModel& model, const Vector& coords,
                                   const Vector& omega);

/// U(z) = sum_i X_i |E_i|^2 / (2 X'_i (X_i - X'_i))
///      + 1/2 sum_ij B^red_ij Re(conj(eps_i) eps_j e^{j delta_ij}).
/// The quadratic sum runs over two-axis machines; classical and droop machines
/// enter the coupling with their constant EMF. Throws LossyNetworkError on a
/// lossy network.
double strain_energy(const SystemModel& model, const SystemState& state);

/// Gradient in energy coordinates: P on the angles, X E/(X'(X - X')) - g on the fluxes.
Vector strain_gradient(const SystemModel& model, const SystemState& state);

struct EnergyReport {
  double U = 0.0;
  Vector gradU;
  Matrix hessU;
  /// Verdicts on the Hessian with the uniform angle shift removed.
  bool hess_psd = false;
  double lambda_min = 0.0;
};

/// Strain energy with its analytic gradient and Hessian (second derivatives
/// taken term by term, independent of the linearization code path).
EnergyReport hessian_U(const SystemModel& model, const SystemState& state);

struct StorageEvaluation {
  double W = 0.0;
  double dWdt = 0.0;
  double supply = 0.0;
};

/// Bregman divergence of U about z_star and its rate along the closed loop
/// driven by P_m_star. supply = delta_dot^T (P(z) - P(z_star)); for machines
/// with inertia delta_dot = omega0 * omega.
StorageEvaluation bregman_storage(const SystemModel& model, const SystemState& state,
                                  const SystemState& z_star, const Vector& P_m_star);

/// omega0 * sum_i M_i omega_i^2 / 2 over machines with inertia.
double kinetic_energy(const SystemModel& model, const SystemState& state);

struct ClassicalEnergy {
  double U = 0.0;
  Vector grad;
  Matrix hess;
  double lambda_min = 0.0;  ///< deflated
  bool psd = false;
};

/// U~(delta) = 1/2 sum_ij V_i V_j B~_ij cos delta_ij with its gradient and
/// graph-Laplacian Hessian.
ClassicalEnergy classical_strain_energy(const Matrix& btilred, const Vector& V_fd,
                                        const Vector& delta);

struct Membership {
  bool in_E = false;
  double lambda_min_hess = 0.0;   ///< deflated Hessian of U
  double lambda_max_Ahat = 0.0;   ///< -inf when there are no two-axis machines
  /// Deflated Hessian of U~; nan when beta_i X_i <= 1 fails and B~ is unavailable.
  double lambda_min_hess_classical = 0.0;
  /// Verdict from (Ahat negative definite, Hessian of U~ positive definite);
  /// empty when B~ is unavailable.
  std::optional<bool> classical_form;
  /// True when some eigenvalue sits inside the interior band, so the two
  /// verdicts were not compared.
  bool near_boundary = false;
};

/// Equilibrium-set membership on a lossless network. Throws ConsistencyError
/// when the two equivalent verdicts disagree away from the boundary, and
/// LossyNetworkError on lossy networks.
Membership membership_E(const SystemModel& model, const SystemState& z_star);

}  // namespace eipass
