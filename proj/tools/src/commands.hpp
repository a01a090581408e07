#pragma once

#include <eipass/model.hpp>

#include <optional>
#include <ostream>
#include <string>

namespace eipass::cli {

struct CommonArgs {
  std::string config;
  std::string out;  ///< empty: stdout
  std::optional<MachineKind> load_model;
  bool lossless = false;
};

struct AngleArgs {
  double delta21 = 0.0;
  double delta31 = 0.0;
  double gauge = 0.0;
};

struct CertifyArgs {
  std::string property = "ni";
  double freq_min = 1e-3;
  double freq_max = 1e4;
  int freq_points = 400;
};

struct SimulateArgs {
  double t_end = 10.0;
  double dt = 0.01;
  int perturb_bus = 0;  ///< one-based; 0 leaves the state at the equilibrium
  double perturb = 0.1;
};

struct SweepArgs {
  int grid = 0;  ///< 0 keeps the config resolution
  bool no_continuation = false;
};

/// Each command returns its process exit code (0 success, 1 verdict false).
int run_reduce(const CommonArgs& common, std::ostream& log);
int run_equilibrium(const CommonArgs& common, const AngleArgs& angles, std::ostream& log);
int run_linearize(const CommonArgs& common, const AngleArgs& angles, std::ostream& log);
int run_certify(const CommonArgs& common, const AngleArgs& angles, const CertifyArgs& args,
                std::ostream& log);
int run_simulate(const CommonArgs& common, const AngleArgs& angles, const SimulateArgs& args,
                 std::ostream& log);
int run_sweep(const CommonArgs& common, const SweepArgs& args, std::ostream& log);

}  // namespace eipass::cli
