#pragma once

#include "eipass/linalg.hpp"
#include "eipass/network.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace eipass {

enum class MachineKind { TwoAxis, Classical, Droop };

std::string_view to_string(MachineKind kind);
MachineKind machine_kind_from_string(std::string_view text);

/// Constants of one machine. Classical and droop machines use `X` as the
/// reactance behind which the constant EMF (V_fd, 0) sits.
struct MachineParams {
  MachineKind kind = MachineKind::TwoAxis;
  double M = 0.0;
  double D = 0.0;
  double X = 0.0;
  double Xprime = 0.0;
  double tau_d = 0.0;
  double tau_q = 0.0;
  double V_fd = 1.0;
  /// Specified mechanical (or reference) power. Empty means the angle of this
  /// machine is prescribed and its P_m follows from the equilibrium.
  std::optional<double> P_m;

  bool has_inertia() const { return kind != MachineKind::Droop; }
  bool is_two_axis() const { return kind == MachineKind::TwoAxis; }
  /// Reactance seen by the network: X' for two-axis machines, X otherwise.
  double network_reactance() const { return is_two_axis() ? Xprime : X; }

  bool operator==(const MachineParams&) const = default;
};

void validate_machine(const MachineParams& m);

/// Index map of the flat state vector
/// [delta (all) | omega (machines with inertia) | E_q (two-axis) | E_d (two-axis)].
struct StateLayout {
  Eigen::Index machine_count = 0;
  std::vector<Eigen::Index> inertial;      ///< machine index per omega slot
  std::vector<Eigen::Index> two_axis;      ///< machine index per E slot
  std::vector<Eigen::Index> omega_slot;    ///< machine -> omega slot or -1
  std::vector<Eigen::Index> flux_slot;     ///< machine -> E slot or -1

  static StateLayout from(const std::vector<MachineParams>& machines);

  Eigen::Index inertial_count() const { return static_cast<Eigen::Index>(inertial.size()); }
  Eigen::Index two_axis_count() const { return static_cast<Eigen::Index>(two_axis.size()); }
  Eigen::Index size() const { return machine_count + inertial_count() + 2 * two_axis_count(); }

  Eigen::Index delta_offset() const { return 0; }
  Eigen::Index omega_offset() const { return machine_count; }
  Eigen::Index eq_offset() const { return machine_count + inertial_count(); }
  Eigen::Index ed_offset() const { return eq_offset() + two_axis_count(); }
};

/// State of the mixed machine network. omega has one entry per machine with
/// inertia; E_q, E_d one entry per two-axis machine.
struct SystemState {
  Vector delta;
  Vector omega;
  Vector Eq;
  Vector Ed;

  Vector pack(const StateLayout& layout) const;
  static SystemState unpack(const StateLayout& layout, const Vector& x);
};

/// Everything needed to evaluate the reduced ODE: machines, the machine-bus
/// admittance matrix, its Kron reduction with network reactances, and (when
/// the shunt condition allows it) the reduced susceptance with synchronous
/// reactances.
struct SystemModel {
  std::vector<MachineParams> machines;
  AdmittanceMatrix admittance;
  ReducedNetwork reduced;
  std::optional<Matrix> btilred;
  double omega0 = kDefaultOmega0;
  StateLayout layout;

  Eigen::Index machine_count() const { return layout.machine_count; }
  bool lossless() const { return reduced.lossless; }

  Vector field_voltages() const;
  Vector sync_reactances() const;
  Vector network_reactances() const;

  /// Full-length internal EMF (one entry per machine); non-two-axis machines
  /// carry the constant (V_fd, 0).
  void internal_emf(const SystemState& s, Vector& eq, Vector& ed) const;
};

/// Builds a model from a machine-bus admittance matrix (one machine per row).
SystemModel make_model(std::vector<MachineParams> machines, AdmittanceMatrix admittance,
                       double omega0 = kDefaultOmega0);

/// Same model with different machine constants (network recomputed as needed).
SystemModel with_machines(const SystemModel& model, std::vector<MachineParams> machines);

/// Classical-model network: every two-axis machine replaced by a classical
/// machine with EMF V_fd behind its synchronous reactance.
SystemModel to_classical(const SystemModel& model);

/// Switches all non-two-axis machines to `kind` (Classical or Droop).
SystemModel with_load_model(const SystemModel& model, MachineKind kind);

}  // namespace eipass
