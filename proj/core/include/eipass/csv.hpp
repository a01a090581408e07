#pragma once

#include "eipass/equilibrium.hpp"
#include "eipass/integrator.hpp"
#include "eipass/linear.hpp"
#include "eipass/model.hpp"

#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace eipass {

/// Shortest round-trip-safe form with 17 significant digits ("nan", "inf" for
/// non-finite values).
std::string format_number(double v);

void write_csv_row(std::ostream& os, const std::vector<std::string>& fields);

/// Columns: delta21,delta31,status,torque_metric,max_re_eig,residual.
void write_sweep_csv(std::ostream& os, const SweepResult& result);

/// Columns: omega,lambda_min.
void write_frequency_csv(std::ostream& os, const FreqCertificate& cert);

/// Reference point used for the storage column of a trajectory.
struct StorageReference {
  SystemState z_star;
  Vector P_m_star;
};

/// Columns: t, delta_*, omega_*, Eq_*, Ed_*, P_*, W (labels use `labels`, one
/// per machine). W is the Bregman storage when a reference is given on a
/// lossless network, nan otherwise.
void write_trajectory_csv(std::ostream& os, const SystemModel& model, const Trajectory& traj,
                          const std::vector<std::string>& labels,
                          const std::optional<StorageReference>& reference);

}  // namespace eipass
