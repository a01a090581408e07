#include "eipass/model.hpp"

#include "eipass/errors.hpp"

#include <cmath>
#include <string>

namespace eipass {

std::string_view to_string(MachineKind kind) {
  switch (kind) {
    case MachineKind::TwoAxis: return "two_axis";
    case MachineKind::Classical: return "classical";
    case MachineKind::Droop: return "droop";
  }
  return "unknown";
}

MachineKind machine_kind_from_string(std::string_view text) {
  if (text == "two_axis") return MachineKind::TwoAxis;
  if (text == "classical") return MachineKind::Classical;
  if (text == "droop") return MachineKind::Droop;
  throw ValidationError("unknown machine kind '" + std::string(text) + "'");
}

void validate_machine(const MachineParams& m) {
  auto positive = [&](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw ValidationError(std::string(to_string(m.kind)) + " machine: " + name +
                            " must be positive");
  };
  positive(m.D, "D");
  positive(m.X, "X");
  positive(m.V_fd, "V_fd");
  if (m.has_inertia()) positive(m.M, "M");
  if (m.is_two_axis()) {
    positive(m.Xprime, "Xprime");
    positive(m.tau_d, "tau_d");
    positive(m.tau_q, "tau_q");
    if (m.Xprime > m.X) throw ValidationError("two_axis machine: Xprime must not exceed X");
  }
  if (m.P_m && !std::isfinite(*m.P_m)) throw ValidationError("P_m must be finite");
}

StateLayout StateLayout::from(const std::vector<MachineParams>& machines) {
  StateLayout layout;
  layout.machine_count = static_cast<Eigen::Index>(machines.size());
  layout.omega_slot.assign(machines.size(), -1);
  layout.flux_slot.assign(machines.size(), -1);
  for (std::size_t i = 0; i < machines.size(); ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    if (machines[i].has_inertia()) {
      layout.omega_slot[i] = layout.inertial_count();
      layout.inertial.push_back(idx);
    }
    if (machines[i].is_two_axis()) {
      layout.flux_slot[i] = layout.two_axis_count();
      layout.two_axis.push_back(idx);
    }
  }
  return layout;
}

Vector SystemState::pack(const StateLayout& layout) const {
  if (delta.size() != layout.machine_count || omega.size() != layout.inertial_count() ||
      Eq.size() != layout.two_axis_count() || Ed.size() != layout.two_axis_count())
    throw ValidationError("state dimensions do not match machine layout");
  Vector x(layout.size());
  x << delta, omega, Eq, Ed;
  return x;
}

SystemState SystemState::unpack(const StateLayout& layout, const Vector& x) {
  if (x.size() != layout.size()) throw ValidationError("state vector has wrong length");
  SystemState s;
  s.delta = x.segment(layout.delta_offset(), layout.machine_count);
  s.omega = x.segment(layout.omega_offset(), layout.inertial_count());
  s.Eq = x.segment(layout.eq_offset(), layout.two_axis_count());
  s.Ed = x.segment(layout.ed_offset(), layout.two_axis_count());
  return s;
}

Vector SystemModel::field_voltages() const {
  Vector v(machine_count());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = machines[static_cast<std::size_t>(i)].V_fd;
  return v;
}

Vector SystemModel::sync_reactances() const {
  Vector v(machine_count());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = machines[static_cast<std::size_t>(i)].X;
  return v;
}

Vector SystemModel::network_reactances() const {
  Vector v(machine_count());
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v(i) = machines[static_cast<std::size_t>(i)].network_reactance();
  return v;
}

void SystemModel::internal_emf(const SystemState& s, Vector& eq, Vector& ed) const {
  const Eigen::Index n = machine_count();
  eq.resize(n);
  ed.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto slot = layout.flux_slot[static_cast<std::size_t>(i)];
    if (slot >= 0) {
      eq(i) = s.Eq(slot);
      ed(i) = s.Ed(slot);
    } else {
      eq(i) = machines[static_cast<std::size_t>(i)].V_fd;
      ed(i) = 0.0;
    }
  }
}

SystemModel make_model(std::vector<MachineParams> machines, AdmittanceMatrix admittance,
                       double omega0) {
  if (static_cast<Eigen::Index>(machines.size()) != admittance.size())
    throw ValidationError("need exactly one machine per retained bus");
  for (const auto& m : machines) validate_machine(m);

  SystemModel model;
  model.machines = std::move(machines);
  model.admittance = std::move(admittance);
  model.omega0 = omega0;
  model.layout = StateLayout::from(model.machines);
  model.reduced = kron_reduce(model.admittance, model.network_reactances());
  if (check_gamma_nonsingular(model.admittance, model.sync_reactances()).condition_holds)
    model.btilred = build_btilred(model.admittance, model.sync_reactances());
  return model;
}

SystemModel with_machines(const SystemModel& model, std::vector<MachineParams> machines) {
  return make_model(std::move(machines), model.admittance, model.omega0);
}

SystemModel to_classical(const SystemModel& model) {
  auto machines = model.machines;
  for (auto& m : machines) {
    if (m.is_two_axis()) {
      m.kind = MachineKind::Classical;
      m.Xprime = 0.0;
      m.tau_d = 0.0;
      m.tau_q = 0.0;
    }
  }
  return with_machines(model, std::move(machines));
}

SystemModel with_load_model(const SystemModel& model, MachineKind kind) {
  if (kind == MachineKind::TwoAxis) throw ValidationError("load model must be classical or droop");
  auto machines = model.machines;
  for (auto& m : machines)
    if (!m.is_two_axis()) m.kind = kind;
  return with_machines(model, std::move(machines));
}

}  // namespace eipass
