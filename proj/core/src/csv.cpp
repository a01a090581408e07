#include "eipass/csv.hpp"

#include "eipass/dynamics.hpp"
#include "eipass/energy.hpp"

#include <cmath>
#include <cstdio>

namespace eipass {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv_row(std::ostream& os, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) os << ',';
    os << fields[i];
  }
  os << '\n';
}

void write_sweep_csv(std::ostream& os, const SweepResult& result) {
  write_csv_row(os, {"delta21", "delta31", "status", "torque_metric", "max_re_eig", "residual"});
  for (const auto& c : result.cells)
    write_csv_row(os, {format_number(c.delta21), format_number(c.delta31),
                       std::string(to_string(c.status)), format_number(c.torque_metric),
                       format_number(c.max_re_eig), format_number(c.residual)});
}

void write_frequency_csv(std::ostream& os, const FreqCertificate& cert) {
  write_csv_row(os, {"omega", "lambda_min"});
  for (const auto& s : cert.samples)
    write_csv_row(os, {format_number(s.omega), format_number(s.lambda_min)});
}

void write_trajectory_csv(std::ostream& os, const SystemModel& model, const Trajectory& traj,
                          const std::vector<std::string>& labels,
                          const std::optional<StorageReference>& reference) {
  const auto& layout = model.layout;
  std::vector<std::string> header{"t"};
  for (Eigen::Index i = 0; i < layout.machine_count; ++i)
    header.push_back("delta_" + labels[static_cast<std::size_t>(i)]);
  for (auto i : layout.inertial) header.push_back("omega_" + labels[static_cast<std::size_t>(i)]);
  for (auto i : layout.two_axis) header.push_back("Eq_" + labels[static_cast<std::size_t>(i)]);
  for (auto i : layout.two_axis) header.push_back("Ed_" + labels[static_cast<std::size_t>(i)]);
  for (Eigen::Index i = 0; i < layout.machine_count; ++i)
    header.push_back("P_" + labels[static_cast<std::size_t>(i)]);
  header.push_back("W");
  write_csv_row(os, header);

  const bool with_storage = reference && model.lossless();
  std::vector<std::string> row;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    row.clear();
    row.push_back(format_number(traj.t[k]));
    const Vector& x = traj.x[k];
    for (Eigen::Index j = 0; j < x.size(); ++j) row.push_back(format_number(x(j)));
    const auto state = SystemState::unpack(layout, x);
    const Vector p = active_power(model, state);
    for (Eigen::Index j = 0; j < p.size(); ++j) row.push_back(format_number(p(j)));
    const double w = with_storage
                         ? bregman_storage(model, state, reference->z_star, reference->P_m_star).W
                         : std::nan("");
    row.push_back(format_number(w));
    write_csv_row(os, row);
  }
}

}  // namespace eipass
