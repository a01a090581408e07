#pragma once

#include "eipass/integrator.hpp"
#include "eipass/linalg.hpp"
#include "eipass/model.hpp"

namespace eipass {

/// k_ij = -B_ij cos d_ij - G_ij sin d_ij,  h_ij = -B_ij sin d_ij + G_ij cos d_ij.
struct CouplingKH {
  Matrix k;
  Matrix h;
};

CouplingKH coupling_kh(const ReducedNetwork& red, const Vector& delta);

/// Active power and the bus voltage terms g = V / X (rotor frame) for every
/// machine, given full-length internal EMF vectors.
struct NetworkTerms {
  Vector P;
  Vector gq;
  Vector gd;
};

NetworkTerms network_terms(const ReducedNetwork& red, const Vector& delta, const Vector& eq,
                           const Vector& ed);

/// Partial derivatives of P and g with respect to delta and the full EMF.
struct NetworkJacobian {
  Matrix dP_ddelta;
  Matrix dP_dEq;
  Matrix dP_dEd;
  Matrix dgq_ddelta;
  Matrix dgd_ddelta;
  /// dg_q/dE_q = dg_d/dE_d = k,  dg_q/dE_d = -h,  dg_d/dE_q = h
  CouplingKH kh;
};

NetworkJacobian network_jacobian(const ReducedNetwork& red, const Vector& delta, const Vector& eq,
                                 const Vector& ed);

Vector active_power(const SystemModel& model, const SystemState& state);

struct VoltageTerms {
  Vector gq;
  Vector gd;
};

VoltageTerms voltage_terms(const SystemModel& model, const SystemState& state);

/// Reactive power output Q_i = E_q g_q + E_d g_d - X_i (g_q^2 + g_d^2). Diagnostic only.
Vector reactive_power(const SystemModel& model, const SystemState& state);

/// Constant inputs of the closed loop; both full-length (one entry per machine).
struct Inputs {
  Vector P_m;
  Vector V_fd;
};

/// Inputs with V_fd from the machine constants and the given mechanical power.
Inputs make_inputs(const SystemModel& model, const Vector& P_m);

/// Time derivative of the packed state (see StateLayout).
Vector rhs(const SystemModel& model, const Vector& x, const Inputs& inputs);

/// Allocation-free variant used by the integrator.
void rhs_into(const SystemModel& model, const Vector& x, const Inputs& inputs, Vector& dx);

/// Closed-loop flux steady-state residual of two-axis machines
/// (-(X/X')E + (X-X')g + [V_fd, 0]) stacked as [q; d].
Vector flux_residual(const SystemModel& model, const SystemState& state, const Vector& V_fd);

/// Integrates the closed loop from x0 over [t0, t1] (t1 < t0 integrates
/// backward) and samples the dense output every `dt_sample`.
Trajectory integrate(const SystemModel& model, const Vector& x0, const Inputs& inputs, double t0,
                     double t1, double dt_sample, const IntegratorOptions& options = {});

}  // namespace eipass
