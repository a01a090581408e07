#pragma once

#include "eipass/equilibrium.hpp"
#include "eipass/integrator.hpp"
#include "eipass/model.hpp"
#include "eipass/network.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace eipass {

/// One [machines] row. Bus indices are zero-based in memory, one-based in files.
/// Empty V_fd means "calibrate"; empty P_m means the angle is prescribed.
struct MachineSpec {
  std::size_t bus = 0;
  MachineKind kind = MachineKind::TwoAxis;
  double M = 0.0;
  double D = 0.0;
  double X = 0.0;
  double Xprime = 0.0;
  double tau_d = 0.0;
  double tau_q = 0.0;
  std::optional<double> V_fd;
  std::optional<double> P_m;

  bool operator==(const MachineSpec&) const = default;
};

struct SweepSettings {
  double range_min = -3.141592653589793;
  double range_max = 3.141592653589793;
  int resolution = 61;
  bool lossless = false;
  bool continuation = true;

  bool operator==(const SweepSettings&) const = default;
};

struct SolverSettings {
  int newton_max_iter = 50;
  double newton_tol = 1e-10;
  double abs_tol = 1e-9;
  double rel_tol = 1e-7;

  bool operator==(const SolverSettings&) const = default;
};

struct NetworkSpec {
  double omega0 = kDefaultOmega0;
  std::size_t bus_count = 0;
  std::vector<LineParams> lines;
  std::vector<MachineSpec> machines;
  SweepSettings sweep;
  SolverSettings solver;

  bool operator==(const NetworkSpec&) const = default;
};

/// Parses the sectioned text format. Throws ValidationError with the line
/// number of the offending row.
NetworkSpec parse_spec_text(std::string_view text);
NetworkSpec parse_spec(const std::filesystem::path& path);

/// Canonical text form; parse_spec_text(serialize_spec(s)) == s.
std::string serialize_spec(const NetworkSpec& spec);

struct BuildOptions {
  /// Replaces the kind of every non-two-axis machine.
  std::optional<MachineKind> load_model;
  /// Zeroes all line conductances (also triggered by [sweep] lossless = true).
  bool lossless = false;
};

struct BuiltSystem {
  SystemModel model;
  std::vector<std::size_t> machine_buses;     ///< zero-based bus of each machine
  std::vector<std::size_t> eliminated_buses;  ///< zero-injection buses removed
  std::vector<std::size_t> calibrated;        ///< machines whose V_fd was calibrated
  NewtonOptions newton;
  IntegratorOptions integrator;
};

/// Assembles Y over all buses, eliminates buses without a machine, applies
/// the load-model override and calibrates V_fd where requested.
BuiltSystem build_system(const NetworkSpec& spec, const BuildOptions& options = {});

}  // namespace eipass
