#pragma once

#include "eipass/linalg.hpp"
#include "eipass/model.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace eipass {

struct NewtonOptions {
  int max_iter = 50;
  double tol = 1e-10;
};

/// z_star has omega = 0. P_m_star = P(z_star) for every machine; for machines
/// with a specified P_m it equals that value within the Newton residual.
struct Equilibrium {
  SystemState z_star;
  Vector P_m_star;
  double residual = 0.0;
  bool converged = false;
  int iterations = 0;
  std::string reason;
};

/// Angles {gauge, gauge + delta21, gauge + delta31} for the three machines
/// whose P_m is left to the equilibrium.
std::vector<double> grid_angles(double delta21, double delta31, double gauge = 0.0);

/// Newton iteration on (angles of machines with specified P_m; two-axis E_q, E_d)
/// with equations (P_i = P_mi; flux steady state). `prescribed` lists, in
/// machine order, the angles of the machines without a specified P_m.
/// Non-convergence is reported through `converged` and `reason`.
Equilibrium solve_equilibrium(const SystemModel& model, const std::vector<double>& prescribed,
                              const std::optional<SystemState>& guess = std::nullopt,
                              const NewtonOptions& options = {});

/// Flux steady state at fixed angles: the E equations are linear in E.
/// Returns (E_q, E_d) of the two-axis machines stacked as [E_q; E_d].
Vector solve_flux_steady_state(const SystemModel& model, const Vector& delta);

/// Chooses V_fd of the listed two-axis machines so that |E_q + j E_d| = 1 at
/// the equilibrium with every prescribed angle equal to zero.
SystemModel calibrate_field_voltages(const SystemModel& model,
                                     const std::vector<std::size_t>& machines,
                                     const NewtonOptions& options = {});

struct ClosedLoop {
  Matrix J;
  CVector eigs;
  CVector deflated_eigs;
  /// Spectral abscissa after removing the uniform angle-shift mode.
  double max_re_eig = 0.0;
};

/// Analytic Jacobian of the packed closed-loop right-hand side at z_star.
ClosedLoop closed_loop_jacobian(const SystemModel& model, const Equilibrium& eq);

enum class CellStatus { Infeasible, UnstableFeasible, StableOutside, InE, InEplus };

std::string_view to_string(CellStatus status);

struct SweepCell {
  double delta21 = 0.0;
  double delta31 = 0.0;
  CellStatus status = CellStatus::Infeasible;
  double torque_metric = 0.0;
  double max_re_eig = 0.0;
  double residual = 0.0;
  bool feasible = false;
  bool stable = false;
  bool in_E = false;
  bool in_Eplus = false;
  /// Some deflated eigenvalue lies inside (-1e-6, 1e-6).
  bool boundary = false;
  std::optional<Equilibrium> equilibrium;
};

/// Classifies a (possibly unconverged) equilibrium. Lossless models use the
/// strain-energy membership test, lossy ones the (A stable, L0 positive) test.
SweepCell classify(const SystemModel& model, const Equilibrium& eq, double delta21,
                   double delta31);

struct SweepSpec {
  double range_min = -3.141592653589793;
  double range_max = 3.141592653589793;
  int resolution = 61;
  bool continuation = true;
  double gauge = 0.0;
};

struct SweepResult {
  std::vector<double> axis;
  /// resolution x resolution cells, row index over delta21, column over delta31.
  std::vector<SweepCell> cells;
  int resolution = 0;

  const SweepCell& at(int i21, int i31) const {
    return cells[static_cast<std::size_t>(i21 * resolution + i31)];
  }
};

/// Grid points range_min + k (range_max - range_min) / resolution, k < resolution.
std::vector<double> sweep_axis(const SweepSpec& spec);

/// Classifies every cell. With continuation, cells are visited breadth-first
/// (on the torus) from the cell nearest the origin and each Newton solve starts
/// from converged neighbours before falling back to the default guess.
SweepResult sweep(const SystemModel& model, const SweepSpec& spec,
                  const NewtonOptions& options = {});

struct SweepAgreement {
  /// Feasible cells outside the boundary band.
  int compared = 0;
  /// Of those, cells whose set membership matches the stability verdict.
  int agree = 0;
  /// (i21, i31) of each disagreeing cell.
  std::vector<std::pair<int, int>> mismatches;
  /// Disagreeing cells with no 8-neighbour (on the torus) of different membership.
  int isolated_mismatches = 0;
  double ratio() const { return compared == 0 ? 1.0 : static_cast<double>(agree) / compared; }
};

/// Compares set membership (in_E on lossless models, in_Eplus otherwise) with
/// closed-loop stability over a sweep.
SweepAgreement set_agreement(const SweepResult& result, bool lossless);

}  // namespace eipass
