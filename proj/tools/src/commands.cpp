#include "commands.hpp"

#include <eipass/config.hpp>
#include <eipass/csv.hpp>
#include <eipass/dynamics.hpp>
#include <eipass/energy.hpp>
#include <eipass/equilibrium.hpp>
#include <eipass/errors.hpp>
#include <eipass/linear.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>

namespace eipass::cli {
namespace {

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw Error("cannot write " + path);
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

BuiltSystem load(const CommonArgs& common, std::ostream& log) {
  const auto spec = parse_spec(common.config);
  BuildOptions options;
  options.load_model = common.load_model;
  options.lossless = common.lossless;
  auto built = build_system(spec, options);
  if (!built.eliminated_buses.empty()) {
    log << "note: eliminated zero-injection buses";
    for (auto b : built.eliminated_buses) log << ' ' << b + 1;
    log << '\n';
  }
  for (auto k : built.calibrated)
    log << "note: calibrated V_fd at bus " << built.machine_buses[k] + 1 << " = "
        << format_number(built.model.machines[k].V_fd) << '\n';
  return built;
}

std::vector<std::string> bus_labels(const BuiltSystem& built) {
  std::vector<std::string> labels;
  for (auto b : built.machine_buses) labels.push_back(std::to_string(b + 1));
  return labels;
}

Equilibrium require_equilibrium(const BuiltSystem& built, const AngleArgs& angles,
                                std::ostream& log) {
  auto eq = solve_equilibrium(built.model, grid_angles(angles.delta21, angles.delta31, angles.gauge),
                              std::nullopt, built.newton);
  if (!eq.converged) throw Error("no equilibrium at the requested angles: " + eq.reason);
  log << "equilibrium residual " << format_number(eq.residual) << " after " << eq.iterations
      << " Newton iterations\n";
  return eq;
}

void write_matrix_long(std::ostream& os, const std::string& name, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      write_csv_row(os, {name, std::to_string(i + 1), std::to_string(j + 1), format_number(m(i, j))});
}

}  // namespace

int run_reduce(const CommonArgs& common, std::ostream& log) {
  const auto built = load(common, log);
  const auto& red = built.model.reduced;
  const auto cert = check_gamma_nonsingular(built.model.admittance, red.reactances);
  log << "lossless " << (red.lossless ? "true" : "false") << '\n'
      << "lambda_min(Gred) " << format_number(red.lambda_min_Gred) << '\n'
      << "lambda_max(Bred) " << format_number(red.lambda_max_Bred) << '\n'
      << "kernel residual " << format_number(red.kernel_residual) << '\n'
      << "gamma rcond " << format_number(red.gamma_rcond) << '\n'
      << "shunt condition " << (cert.condition_holds ? "holds" : "fails") << '\n';

  Output out(common.out);
  auto& os = out.stream();
  write_csv_row(os, {"matrix", "row", "col", "value"});
  write_matrix_long(os, "Gred", red.Gred);
  write_matrix_long(os, "Bred", red.Bred);
  if (built.model.btilred) write_matrix_long(os, "Btilred", *built.model.btilred);
  return 0;
}

int run_equilibrium(const CommonArgs& common, const AngleArgs& angles, std::ostream& log) {
  const auto built = load(common, log);
  const auto& model = built.model;
  const auto eq = require_equilibrium(built, angles, log);
  Vector e_q, e_d;
  model.internal_emf(eq.z_star, e_q, e_d);
  const Vector p = active_power(model, eq.z_star);
  const Vector q = reactive_power(model, eq.z_star);

  Output out(common.out);
  auto& os = out.stream();
  write_csv_row(os, {"bus", "kind", "delta", "Eq", "Ed", "P", "Q", "P_m_star", "V_fd"});
  for (Eigen::Index i = 0; i < model.machine_count(); ++i) {
    const auto& m = model.machines[static_cast<std::size_t>(i)];
    write_csv_row(os, {std::to_string(built.machine_buses[static_cast<std::size_t>(i)] + 1),
                       std::string(to_string(m.kind)), format_number(eq.z_star.delta(i)),
                       format_number(e_q(i)), format_number(e_d(i)), format_number(p(i)),
                       format_number(q(i)), format_number(eq.P_m_star(i)), format_number(m.V_fd)});
  }
  return 0;
}

int run_linearize(const CommonArgs& common, const AngleArgs& angles, std::ostream& log) {
  const auto built = load(common, log);
  const auto eq = require_equilibrium(built, angles, log);
  const auto lm = linearize(built.model, eq.z_star);
  const auto cell = classify(built.model, eq, angles.delta21, angles.delta31);
  log << "status " << to_string(cell.status) << '\n'
      << "closed-loop max Re eig " << format_number(cell.max_re_eig) << '\n';
  if (lm.L0_defined) {
    const auto torque = torque_coefficient_matrix(lm);
    log << "L0 symmetry gap " << format_number(torque.sym_gap) << '\n'
        << "positive eigenvalue product " << format_number(torque.positive_eig_product) << '\n'
        << "deflated L0 eigenvalues";
    for (const auto& l : torque.deflated_eigs) log << ' ' << format_number(l.real());
    log << '\n';
  } else {
    log << "A is singular; L0 undefined\n";
  }

  Output out(common.out);
  auto& os = out.stream();
  write_csv_row(os, {"matrix", "row", "col", "value"});
  write_matrix_long(os, "A", lm.A);
  write_matrix_long(os, "B", lm.B);
  write_matrix_long(os, "C", lm.C);
  write_matrix_long(os, "L", lm.L);
  write_matrix_long(os, "Ahat", lm.Ahat);
  write_matrix_long(os, "Bhat", lm.Bhat);
  if (lm.L0_defined) write_matrix_long(os, "L0", lm.L0);
  return 0;
}

int run_certify(const CommonArgs& common, const AngleArgs& angles, const CertifyArgs& args,
                std::ostream& log) {
  if (args.property != "ni" && args.property != "pr")
    throw ValidationError("--property must be ni or pr");
  const auto built = load(common, log);
  const auto eq = require_equilibrium(built, angles, log);
  const auto lm = linearize(built.model, eq.z_star);
  const auto grid = log_frequency_grid(args.freq_min, args.freq_max,
                                       static_cast<std::size_t>(std::max(args.freq_points, 0)));
  const auto cert = args.property == "ni" ? certify_negative_imaginary(lm, grid)
                                          : certify_positive_real(lm, grid);
  log << (args.property == "ni" ? "negative imaginary " : "positive real ")
      << (cert.verdict ? "PASS" : "FAIL") << '\n'
      << "worst omega " << format_number(cert.worst_omega) << '\n'
      << "worst lambda " << format_number(cert.worst_lambda) << '\n';
  if (args.property == "pr") log << "residue check " << (cert.residue_check ? "pass" : "fail") << '\n';
  if (!cert.reason.empty()) log << "reason: " << cert.reason << '\n';

  Output out(common.out);
  write_frequency_csv(out.stream(), cert);
  return cert.verdict ? 0 : 1;
}

int run_simulate(const CommonArgs& common, const AngleArgs& angles, const SimulateArgs& args,
                 std::ostream& log) {
  const auto built = load(common, log);
  const auto& model = built.model;
  const auto eq = require_equilibrium(built, angles, log);
  Vector x0 = eq.z_star.pack(model.layout);
  if (args.perturb_bus > 0) {
    const auto bus = static_cast<std::size_t>(args.perturb_bus - 1);
    const auto it = std::find(built.machine_buses.begin(), built.machine_buses.end(), bus);
    if (it == built.machine_buses.end())
      throw ValidationError("no machine at bus " + std::to_string(args.perturb_bus));
    x0(it - built.machine_buses.begin()) += args.perturb;
  }
  auto options = built.integrator;
  const auto traj = integrate(model, x0, make_inputs(model, eq.P_m_star), 0.0, args.t_end, args.dt,
                              options);
  log << "accepted steps " << traj.accepted_steps << '\n';

  std::optional<StorageReference> reference;
  if (model.lossless()) reference = StorageReference{eq.z_star, eq.P_m_star};
  Output out(common.out);
  write_trajectory_csv(out.stream(), model, traj, bus_labels(built), reference);
  return 0;
}

int run_sweep(const CommonArgs& common, const SweepArgs& args, std::ostream& log) {
  const auto spec = parse_spec(common.config);
  const auto built = load(common, log);
  SweepSpec sweep_spec;
  sweep_spec.range_min = spec.sweep.range_min;
  sweep_spec.range_max = spec.sweep.range_max;
  sweep_spec.resolution = args.grid > 0 ? args.grid : spec.sweep.resolution;
  sweep_spec.continuation = spec.sweep.continuation && !args.no_continuation;
  const auto result = sweep(built.model, sweep_spec, built.newton);

  std::map<std::string_view, int> counts;
  for (const auto& c : result.cells) ++counts[to_string(c.status)];
  for (const auto& [name, count] : counts) log << name << ' ' << count << '\n';
  const auto agreement = set_agreement(result, built.model.lossless());
  log << "set agreement " << agreement.agree << " / " << agreement.compared
      << " feasible non-boundary cells, " << agreement.isolated_mismatches
      << " mismatches away from the set boundary\n";

  Output out(common.out);
  write_sweep_csv(out.stream(), result);
  return 0;
}

}  // namespace eipass::cli
