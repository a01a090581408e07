#include "eipass/equilibrium.hpp"

#include "eipass/dynamics.hpp"
#include "eipass/energy.hpp"
#include "eipass/errors.hpp"
#include "eipass/linear.hpp"

#include <cmath>
#include <deque>
#include <functional>
#include <limits>

namespace eipass {
namespace {

struct Unknowns {
  std::vector<Eigen::Index> free_angles;   // machines whose angle is solved for
  std::vector<Eigen::Index> fixed_angles;  // machines with prescribed angle
  std::vector<Eigen::Index> calibrated;    // two-axis slots whose V_fd is solved for
};

Unknowns classify_machines(const SystemModel& model) {
  Unknowns u;
  for (Eigen::Index i = 0; i < model.machine_count(); ++i) {
    if (model.machines[static_cast<std::size_t>(i)].P_m)
      u.free_angles.push_back(i);
    else
      u.fixed_angles.push_back(i);
  }
  return u;
}

// Residual and Jacobian of (P balance on free machines; flux steady state;
// |E|^2 = 1 on calibrated slots) with unknowns (free angles; E_q; E_d; V_fd of
// calibrated slots).
struct EquilibriumSystem {
  const SystemModel& model;
  Unknowns u;
  Vector delta;  // full angle vector; free entries overwritten from x
  Vector V_fd;

  Eigen::Index nf() const { return static_cast<Eigen::Index>(u.free_angles.size()); }
  Eigen::Index na() const { return model.layout.two_axis_count(); }
  Eigen::Index nc() const { return static_cast<Eigen::Index>(u.calibrated.size()); }
  Eigen::Index size() const { return nf() + 2 * na() + nc(); }

  void unpack(const Vector& x, SystemState& s) {
    for (Eigen::Index f = 0; f < nf(); ++f) delta(u.free_angles[static_cast<std::size_t>(f)]) = x(f);
    for (Eigen::Index c = 0; c < nc(); ++c) {
      const auto slot = u.calibrated[static_cast<std::size_t>(c)];
      V_fd(model.layout.two_axis[static_cast<std::size_t>(slot)]) = x(nf() + 2 * na() + c);
    }
    s.delta = delta;
    s.omega = Vector::Zero(model.layout.inertial_count());
    s.Eq = x.segment(nf(), na());
    s.Ed = x.segment(nf() + na(), na());
  }

  void evaluate(const Vector& x, Vector& F, Matrix* J) {
    SystemState s;
    unpack(x, s);
    Vector eq, ed;
    model.internal_emf(s, eq, ed);
    // classical machines carry (V_fd, 0); keep calibrated values consistent
    for (Eigen::Index i = 0; i < model.machine_count(); ++i)
      if (model.layout.flux_slot[static_cast<std::size_t>(i)] < 0) eq(i) = V_fd(i);
    const auto t = network_terms(model.reduced, s.delta, eq, ed);

    const Eigen::Index n_f = nf(), n_a = na(), n_c = nc();
    F.resize(size());
    for (Eigen::Index f = 0; f < n_f; ++f) {
      const auto i = u.free_angles[static_cast<std::size_t>(f)];
      F(f) = t.P(i) - *model.machines[static_cast<std::size_t>(i)].P_m;
    }
    for (Eigen::Index a = 0; a < n_a; ++a) {
      const auto i = model.layout.two_axis[static_cast<std::size_t>(a)];
      const auto& m = model.machines[static_cast<std::size_t>(i)];
      const double ratio = m.X / m.Xprime;
      const double gap = m.X - m.Xprime;
      F(n_f + a) = -ratio * s.Eq(a) + gap * t.gq(i) + V_fd(i);
      F(n_f + n_a + a) = -ratio * s.Ed(a) + gap * t.gd(i);
    }
    for (Eigen::Index c = 0; c < n_c; ++c) {
      const auto slot = u.calibrated[static_cast<std::size_t>(c)];
      F(n_f + 2 * n_a + c) = s.Eq(slot) * s.Eq(slot) + s.Ed(slot) * s.Ed(slot) - 1.0;
    }
    if (!J) return;

    const auto jac = network_jacobian(model.reduced, s.delta, eq, ed);
    const Matrix& k = jac.kh.k;
    const Matrix& h = jac.kh.h;
    J->setZero(size(), size());
    for (Eigen::Index f = 0; f < n_f; ++f) {
      const auto i = u.free_angles[static_cast<std::size_t>(f)];
      for (Eigen::Index g = 0; g < n_f; ++g)
        (*J)(f, g) = jac.dP_ddelta(i, u.free_angles[static_cast<std::size_t>(g)]);
      for (Eigen::Index b = 0; b < n_a; ++b) {
        const auto j = model.layout.two_axis[static_cast<std::size_t>(b)];
        (*J)(f, n_f + b) = jac.dP_dEq(i, j);
        (*J)(f, n_f + n_a + b) = jac.dP_dEd(i, j);
      }
    }
    for (Eigen::Index a = 0; a < n_a; ++a) {
      const auto i = model.layout.two_axis[static_cast<std::size_t>(a)];
      const auto& m = model.machines[static_cast<std::size_t>(i)];
      const double ratio = m.X / m.Xprime;
      const double gap = m.X - m.Xprime;
      const Eigen::Index rq = n_f + a;
      const Eigen::Index rd = n_f + n_a + a;
      for (Eigen::Index g = 0; g < n_f; ++g) {
        const auto j = u.free_angles[static_cast<std::size_t>(g)];
        (*J)(rq, g) = gap * jac.dgq_ddelta(i, j);
        (*J)(rd, g) = gap * jac.dgd_ddelta(i, j);
      }
      for (Eigen::Index b = 0; b < n_a; ++b) {
        const auto j = model.layout.two_axis[static_cast<std::size_t>(b)];
        (*J)(rq, n_f + b) = gap * k(i, j);
        (*J)(rq, n_f + n_a + b) = -gap * h(i, j);
        (*J)(rd, n_f + b) = gap * h(i, j);
        (*J)(rd, n_f + n_a + b) = gap * k(i, j);
      }
      (*J)(rq, n_f + a) -= ratio;
      (*J)(rd, n_f + n_a + a) -= ratio;
    }
    for (Eigen::Index c = 0; c < n_c; ++c) {
      const auto slot = u.calibrated[static_cast<std::size_t>(c)];
      (*J)(n_f + slot, n_f + 2 * n_a + c) = 1.0;
      (*J)(n_f + 2 * n_a + c, n_f + slot) = 2.0 * s.Eq(slot);
      (*J)(n_f + 2 * n_a + c, n_f + n_a + slot) = 2.0 * s.Ed(slot);
    }
  }
};

struct NewtonOutcome {
  Vector x;
  double residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  std::string reason;
};

NewtonOutcome newton(EquilibriumSystem& sys, Vector x, const NewtonOptions& options) {
  NewtonOutcome out;
  Vector F, F_trial;
  Matrix J;
  sys.evaluate(x, F, &J);
  double norm = F.size() == 0 ? 0.0 : F.cwiseAbs().maxCoeff();
  for (int iter = 0;; ++iter) {
    out.iterations = iter;
    if (!std::isfinite(norm)) {
      out.reason = "non-finite residual";
      break;
    }
    if (norm <= options.tol) {
      out.converged = true;
      break;
    }
    if (iter >= options.max_iter) {
      out.reason = "no convergence after " + std::to_string(options.max_iter) + " iterations";
      break;
    }
    Eigen::PartialPivLU<Matrix> lu(J);
    if (!(lu.rcond() >= tol::kSingularRcond)) {
      out.reason = "singular Jacobian";
      break;
    }
    const Vector step = lu.solve(F);
    double lambda = 1.0;
    bool accepted = false;
    Vector trial;
    for (int halving = 0; halving < 30; ++halving, lambda *= 0.5) {
      trial = x - lambda * step;
      sys.evaluate(trial, F_trial, nullptr);
      const double trial_norm = F_trial.cwiseAbs().maxCoeff();
      if (std::isfinite(trial_norm) && trial_norm < norm) {
        accepted = true;
        norm = trial_norm;
        break;
      }
    }
    if (!accepted) {
      out.reason = "step damping failed to reduce the residual";
      break;
    }
    x = trial;
    sys.evaluate(x, F, &J);
  }
  out.x = std::move(x);
  out.residual = norm;
  return out;
}

std::vector<Eigen::Index> neighbours(int i21, int i31, int res) {
  std::vector<Eigen::Index> out;
  const int di[] = {-1, 1, 0, 0};
  const int dj[] = {0, 0, -1, 1};
  for (int k = 0; k < 4; ++k) {
    const int a = (i21 + di[k] + res) % res;
    const int b = (i31 + dj[k] + res) % res;
    out.push_back(static_cast<Eigen::Index>(a) * res + b);
  }
  return out;
}

}  // namespace

std::vector<double> grid_angles(double delta21, double delta31, double gauge) {
  return {gauge, gauge + delta21, gauge + delta31};
}

Vector solve_flux_steady_state(const SystemModel& model, const Vector& delta) {
  const auto& layout = model.layout;
  const Eigen::Index n = layout.machine_count;
  const Eigen::Index na = layout.two_axis_count();
  if (delta.size() != n) throw ValidationError("angle vector does not match machine count");
  const auto kh = coupling_kh(model.reduced, delta);

  // g_q = sum_j k_ij Eq_j - h_ij Ed_j,  g_d = sum_j h_ij Eq_j + k_ij Ed_j
  Matrix lhs = Matrix::Zero(2 * na, 2 * na);
  Vector rhs_vec = Vector::Zero(2 * na);
  for (Eigen::Index a = 0; a < na; ++a) {
    const auto i = layout.two_axis[static_cast<std::size_t>(a)];
    const auto& m = model.machines[static_cast<std::size_t>(i)];
    const double gap = m.X - m.Xprime;
    lhs(a, a) -= m.X / m.Xprime;
    lhs(na + a, na + a) -= m.X / m.Xprime;
    for (Eigen::Index b = 0; b < na; ++b) {
      const auto j = layout.two_axis[static_cast<std::size_t>(b)];
      lhs(a, b) += gap * kh.k(i, j);
      lhs(a, na + b) -= gap * kh.h(i, j);
      lhs(na + a, b) += gap * kh.h(i, j);
      lhs(na + a, na + b) += gap * kh.k(i, j);
    }
    rhs_vec(a) = -m.V_fd;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (layout.flux_slot[static_cast<std::size_t>(j)] >= 0) continue;
      const double v = model.machines[static_cast<std::size_t>(j)].V_fd;
      rhs_vec(a) -= gap * kh.k(i, j) * v;
      rhs_vec(na + a) -= gap * kh.h(i, j) * v;
    }
  }
  Eigen::PartialPivLU<Matrix> lu(lhs);
  if (na > 0 && !(lu.rcond() >= tol::kSingularRcond))
    throw SingularityError("flux steady-state system is singular");
  return na == 0 ? Vector{} : Vector(lu.solve(rhs_vec));
}

Equilibrium solve_equilibrium(const SystemModel& model, const std::vector<double>& prescribed,
                              const std::optional<SystemState>& guess,
                              const NewtonOptions& options) {
  EquilibriumSystem sys{model, classify_machines(model), Vector::Zero(model.machine_count()),
                        model.field_voltages()};
  if (sys.u.fixed_angles.empty())
    throw ValidationError("at least one machine needs a prescribed angle (P_m = auto)");
  if (prescribed.size() != sys.u.fixed_angles.size())
    throw ValidationError("expected " + std::to_string(sys.u.fixed_angles.size()) +
                          " prescribed angles, got " + std::to_string(prescribed.size()));

  if (guess) {
    if (guess->delta.size() != model.machine_count() ||
        guess->Eq.size() != model.layout.two_axis_count() ||
        guess->Ed.size() != model.layout.two_axis_count())
      throw ValidationError("equilibrium guess has wrong dimensions");
    sys.delta = guess->delta;
  }
  for (std::size_t k = 0; k < prescribed.size(); ++k) sys.delta(sys.u.fixed_angles[k]) = prescribed[k];

  const Eigen::Index nf = sys.nf();
  const Eigen::Index na = sys.na();
  Vector x(sys.size());
  for (Eigen::Index f = 0; f < nf; ++f) x(f) = sys.delta(sys.u.free_angles[static_cast<std::size_t>(f)]);
  if (guess) {
    x.segment(nf, na) = guess->Eq;
    x.segment(nf + na, na) = guess->Ed;
  } else {
    x.segment(nf, 2 * na) = solve_flux_steady_state(model, sys.delta);
  }

  const auto outcome = newton(sys, x, options);
  Equilibrium eq;
  sys.unpack(outcome.x, eq.z_star);
  eq.residual = outcome.residual;
  eq.converged = outcome.converged;
  eq.iterations = outcome.iterations;
  eq.reason = outcome.reason;

  // P(z_star) also for machines with a specified P_m: they differ by the
  // Newton residual, and droop gains omega0 / D would amplify that gap in rhs
  eq.P_m_star = active_power(model, eq.z_star);
  return eq;
}

SystemModel calibrate_field_voltages(const SystemModel& model,
                                     const std::vector<std::size_t>& machines,
                                     const NewtonOptions& options) {
  if (machines.empty()) return model;
  EquilibriumSystem sys{model, classify_machines(model), Vector::Zero(model.machine_count()),
                        model.field_voltages()};
  if (sys.u.fixed_angles.empty())
    throw ValidationError("calibration needs at least one machine with a prescribed angle");
  for (auto i : machines) {
    if (i >= model.machines.size() || !model.machines[i].is_two_axis())
      throw ValidationError("only two-axis machines can have a calibrated field voltage");
    sys.u.calibrated.push_back(model.layout.flux_slot[i]);
  }

  const Eigen::Index nf = sys.nf();
  const Eigen::Index na = sys.na();
  Vector x = Vector::Zero(sys.size());
  x.segment(nf, 2 * na) = solve_flux_steady_state(model, sys.delta);
  for (Eigen::Index c = 0; c < sys.nc(); ++c) x(nf + 2 * na + c) = model.machines[machines[static_cast<std::size_t>(c)]].V_fd;

  const auto outcome = newton(sys, x, options);
  if (!outcome.converged)
    throw Error("field-voltage calibration failed: " + outcome.reason);
  SystemState s;
  sys.unpack(outcome.x, s);
  auto updated = model.machines;
  for (std::size_t c = 0; c < machines.size(); ++c)
    updated[machines[c]].V_fd = sys.V_fd(static_cast<Eigen::Index>(machines[c]));
  return with_machines(model, std::move(updated));
}

ClosedLoop closed_loop_jacobian(const SystemModel& model, const Equilibrium& eq) {
  const auto& layout = model.layout;
  const Eigen::Index n = layout.machine_count;
  const Eigen::Index na = layout.two_axis_count();
  const auto lm = linearize(model, eq.z_star);

  ClosedLoop cl;
  cl.J = Matrix::Zero(layout.size(), layout.size());
  const Eigen::Index e0 = layout.eq_offset();
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& m = model.machines[static_cast<std::size_t>(i)];
    const auto slot = layout.omega_slot[static_cast<std::size_t>(i)];
    if (slot >= 0) {
      const Eigen::Index r = layout.omega_offset() + slot;
      cl.J(i, r) = model.omega0;
      cl.J.block(r, 0, 1, n) = -lm.L.row(i) / m.M;
      cl.J(r, r) = -m.D / m.M;
      cl.J.block(r, e0, 1, 2 * na) = -lm.C.row(i) / m.M;
    } else {
      const double gain = model.omega0 / m.D;
      cl.J.block(i, 0, 1, n) = -gain * lm.L.row(i);
      cl.J.block(i, e0, 1, 2 * na) = -gain * lm.C.row(i);
    }
  }
  const Vector inv_tau = lm.tau.cwiseInverse();
  cl.J.block(e0, 0, 2 * na, n) = inv_tau.asDiagonal() * lm.B;
  cl.J.block(e0, e0, 2 * na, 2 * na) = inv_tau.asDiagonal() * lm.A;

  cl.eigs = eigenvalues(cl.J);
  cl.deflated_eigs = eigenvalues(deflate_angles(cl.J, n));
  cl.max_re_eig = -std::numeric_limits<double>::infinity();
  for (const auto& l : cl.deflated_eigs) cl.max_re_eig = std::max(cl.max_re_eig, l.real());
  return cl;
}

std::string_view to_string(CellStatus status) {
  switch (status) {
    case CellStatus::Infeasible: return "Infeasible";
    case CellStatus::UnstableFeasible: return "UnstableFeasible";
    case CellStatus::StableOutside: return "StableOutside";
    case CellStatus::InE: return "InE";
    case CellStatus::InEplus: return "InEplus";
  }
  return "Unknown";
}

SweepCell classify(const SystemModel& model, const Equilibrium& eq, double delta21,
                   double delta31) {
  SweepCell cell;
  cell.delta21 = delta21;
  cell.delta31 = delta31;
  cell.residual = eq.residual;
  cell.max_re_eig = std::numeric_limits<double>::quiet_NaN();
  cell.torque_metric = std::numeric_limits<double>::quiet_NaN();
  if (!eq.converged) return cell;

  const Eigen::Index n = model.machine_count();
  const auto lm = linearize(model, eq.z_star);
  cell.feasible = true;
  cell.equilibrium = eq;

  const auto cl = closed_loop_jacobian(model, eq);
  cell.max_re_eig = cl.max_re_eig;
  cell.stable = cl.max_re_eig < -tol::kStability;
  if (!lm.L0_defined) {
    // A singular: the flux subsystem sits exactly on a stability boundary
    cell.boundary = true;
    cell.status = cell.stable ? CellStatus::StableOutside : CellStatus::UnstableFeasible;
    return cell;
  }

  const auto torque = torque_coefficient_matrix(lm);
  cell.torque_metric = torque.positive_eig_product;
  double min_re_l0 = std::numeric_limits<double>::infinity();
  for (const auto& l : torque.deflated_eigs) min_re_l0 = std::min(min_re_l0, l.real());
  const double a_abscissa = lm.flux_count() == 0 ? -std::numeric_limits<double>::infinity()
                                                 : spectral_abscissa(lm.A);
  cell.in_Eplus = a_abscissa < -tol::kInterior && (n < 2 || min_re_l0 > tol::kInterior);

  auto inside_band = [](double v) { return std::abs(v) < tol::kBoundary; };
  bool boundary = false;
  for (const auto& l : torque.deflated_eigs) boundary = boundary || inside_band(l.real());
  for (const auto& l : eigenvalues(lm.A)) boundary = boundary || inside_band(l.real());
  for (const auto& l : cl.deflated_eigs) boundary = boundary || inside_band(l.real());

  if (model.lossless()) {
    const auto membership = membership_E(model, eq.z_star);
    cell.in_E = membership.in_E;
    boundary = boundary || inside_band(membership.lambda_min_hess);
    cell.status = cell.in_E ? CellStatus::InE
                  : cell.stable ? CellStatus::StableOutside
                                : CellStatus::UnstableFeasible;
  } else {
    cell.status = cell.in_Eplus ? CellStatus::InEplus
                  : cell.stable ? CellStatus::StableOutside
                                : CellStatus::UnstableFeasible;
  }
  cell.boundary = boundary;
  return cell;
}

std::vector<double> sweep_axis(const SweepSpec& spec) {
  if (spec.resolution < 1 || !(spec.range_max > spec.range_min))
    throw ValidationError("sweep needs resolution >= 1 and range_max > range_min");
  std::vector<double> axis(static_cast<std::size_t>(spec.resolution));
  const double step = (spec.range_max - spec.range_min) / spec.resolution;
  for (int k = 0; k < spec.resolution; ++k)
    axis[static_cast<std::size_t>(k)] = spec.range_min + k * step;
  return axis;
}

SweepResult sweep(const SystemModel& model, const SweepSpec& spec, const NewtonOptions& options) {
  SweepResult result;
  result.axis = sweep_axis(spec);
  result.resolution = spec.resolution;
  const int res = spec.resolution;
  const auto total = static_cast<std::size_t>(res) * static_cast<std::size_t>(res);
  result.cells.resize(total);

  auto solve_cell = [&](std::size_t idx, const std::vector<const Equilibrium*>& seeds) {
    const int i21 = static_cast<int>(idx) / res;
    const int i31 = static_cast<int>(idx) % res;
    const double d21 = result.axis[static_cast<std::size_t>(i21)];
    const double d31 = result.axis[static_cast<std::size_t>(i31)];
    const auto angles = grid_angles(d21, d31, spec.gauge);
    Equilibrium eq;
    bool have = false;
    for (const auto* seed : seeds) {
      eq = solve_equilibrium(model, angles, seed->z_star, options);
      have = true;
      if (eq.converged) break;
    }
    if (!have || !eq.converged) {
      auto fresh = solve_equilibrium(model, angles, std::nullopt, options);
      if (!have || fresh.converged) eq = std::move(fresh);
    }
    result.cells[idx] = classify(model, eq, d21, d31);
  };

  if (!spec.continuation) {
    for (std::size_t idx = 0; idx < total; ++idx) solve_cell(idx, {});
    return result;
  }

  auto nearest_zero = [&]() {
    int best = 0;
    for (int k = 1; k < res; ++k)
      if (std::abs(result.axis[static_cast<std::size_t>(k)]) <
          std::abs(result.axis[static_cast<std::size_t>(best)]))
        best = k;
    return best;
  };
  const int c = nearest_zero();
  std::vector<bool> queued(total, false);
  std::vector<bool> done(total, false);
  std::deque<std::size_t> queue;
  const auto start = static_cast<std::size_t>(c) * static_cast<std::size_t>(res) + static_cast<std::size_t>(c);
  queue.push_back(start);
  queued[start] = true;
  while (!queue.empty()) {
    const auto idx = queue.front();
    queue.pop_front();
    const int i21 = static_cast<int>(idx) / res;
    const int i31 = static_cast<int>(idx) % res;
    std::vector<const Equilibrium*> seeds;
    for (auto nb : neighbours(i21, i31, res)) {
      const auto k = static_cast<std::size_t>(nb);
      if (done[k] && result.cells[k].equilibrium) seeds.push_back(&*result.cells[k].equilibrium);
    }
    solve_cell(idx, seeds);
    done[idx] = true;
    for (auto nb : neighbours(i21, i31, res)) {
      const auto k = static_cast<std::size_t>(nb);
      if (!queued[k]) {
        queued[k] = true;
        queue.push_back(k);
      }
    }
  }
  return result;
}

SweepAgreement set_agreement(const SweepResult& result, bool lossless) {
  const int res = result.resolution;
  auto member = [&](int i21, int i31) {
    const auto& c = result.at((i21 + res) % res, (i31 + res) % res);
    return c.feasible && (lossless ? c.in_E : c.in_Eplus);
  };
  SweepAgreement out;
  for (int i21 = 0; i21 < res; ++i21) {
    for (int i31 = 0; i31 < res; ++i31) {
      const auto& c = result.at(i21, i31);
      if (!c.feasible || c.boundary) continue;
      ++out.compared;
      if (member(i21, i31) == c.stable) {
        ++out.agree;
        continue;
      }
      out.mismatches.emplace_back(i21, i31);
      bool adjacent = false;
      for (int a = -1; a <= 1; ++a)
        for (int b = -1; b <= 1; ++b)
          adjacent = adjacent || member(i21 + a, i31 + b) != member(i21, i31);
      if (!adjacent) ++out.isolated_mismatches;
    }
  }
  return out;
}

}  // namespace eipass
