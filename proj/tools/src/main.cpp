#include "commands.hpp"

#include <eipass/errors.hpp>

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace eipass::cli;
  CLI::App app{"Kron reduction, equilibria, passivity certificates and sweeps for machine networks"};
  app.require_subcommand(1);

  CommonArgs common;
  AngleArgs angles;
  CertifyArgs certify;
  SimulateArgs simulate;
  SweepArgs sweep;
  std::string load_model;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("config", common.config, "system description file")->required();
    cmd->add_option("--out", common.out, "output CSV path (default: stdout)");
    cmd->add_option("--load-model", load_model, "treat non-two-axis machines as classical or droop")
        ->check(CLI::IsMember({"classical", "droop"}));
    cmd->add_flag("--lossless", common.lossless, "zero every line conductance");
  };
  auto add_angles = [&](CLI::App* cmd) {
    cmd->add_option("--delta21", angles.delta21, "angle of machine 2 relative to machine 1 (rad)");
    cmd->add_option("--delta31", angles.delta31, "angle of machine 3 relative to machine 1 (rad)");
    cmd->add_option("--gauge", angles.gauge, "absolute angle of machine 1 (rad)");
  };

  auto* reduce = app.add_subcommand("reduce", "Kron-reduce the network and report definiteness");
  add_common(reduce);
  auto* equilibrium = app.add_subcommand("equilibrium", "solve one equilibrium");
  add_common(equilibrium);
  add_angles(equilibrium);
  auto* linearize = app.add_subcommand("linearize", "linear model and torque coefficients");
  add_common(linearize);
  add_angles(linearize);
  auto* cert = app.add_subcommand("certify", "frequency-grid NI / PR certificate");
  add_common(cert);
  add_angles(cert);
  cert->add_option("--property", certify.property, "ni (negative imaginary) or pr (positive real)")
      ->check(CLI::IsMember({"ni", "pr"}));
  cert->add_option("--freq-min", certify.freq_min, "lowest grid frequency (rad/s)");
  cert->add_option("--freq-max", certify.freq_max, "highest grid frequency (rad/s)");
  cert->add_option("--freq-points", certify.freq_points, "number of log-spaced frequencies");
  auto* sim = app.add_subcommand("simulate", "integrate the closed loop from a perturbed equilibrium");
  add_common(sim);
  add_angles(sim);
  sim->add_option("--t-end", simulate.t_end, "final time (s)");
  sim->add_option("--dt", simulate.dt, "sampling interval of the output (s)");
  sim->add_option("--perturb-bus", simulate.perturb_bus, "bus whose machine angle is perturbed");
  sim->add_option("--perturb", simulate.perturb, "angle perturbation (rad)");
  auto* sw = app.add_subcommand("sweep", "classify equilibria over the (delta21, delta31) grid");
  add_common(sw);
  sw->add_option("--grid", sweep.grid, "grid resolution per axis (overrides the config)");
  sw->add_flag("--no-continuation", sweep.no_continuation, "solve every cell from the default guess");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (load_model == "classical") common.load_model = eipass::MachineKind::Classical;
    if (load_model == "droop") common.load_model = eipass::MachineKind::Droop;
    auto& log = std::cerr;
    if (*reduce) return run_reduce(common, log);
    if (*equilibrium) return run_equilibrium(common, angles, log);
    if (*linearize) return run_linearize(common, angles, log);
    if (*cert) return run_certify(common, angles, certify, log);
    if (*sim) return run_simulate(common, angles, simulate, log);
    if (*sw) return run_sweep(common, sweep, log);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
