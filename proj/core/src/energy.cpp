#include "eipass/energy.hpp"

#include "eipass/dynamics.hpp"
#include "eipass/errors.hpp"

#include <array>
#include <cmath>
#include <limits>

namespace eipass {
namespace {

void require_lossless(const SystemModel& model) {
  if (!model.lossless())
    throw LossyNetworkError("strain energy is only defined on a lossless network");
}

// X / (X' (X - X')) per two-axis slot
Vector flux_stiffness(const SystemModel& model) {
  const auto& layout = model.layout;
  Vector s(layout.two_axis_count());
  for (Eigen::Index a = 0; a < s.size(); ++a) {
    const auto& m = model.machines[static_cast<std::size_t>(layout.two_axis[static_cast<std::size_t>(a)])];
    s(a) = m.X / (m.Xprime * (m.X - m.Xprime));
  }
  return s;
}

}  // namespace

Vector energy_coordinates(const SystemModel& model, const SystemState& state) {
  const auto& layout = model.layout;
  Vector c(layout.machine_count + 2 * layout.two_axis_count());
  c << state.delta, state.Eq, state.Ed;
  return c;
}

SystemState state_from_coordinates(const SystemModel& model, const Vector& coords,
                                   const Vector& omega) {
  const auto& layout = model.layout;
  const Eigen::Index n = layout.machine_count;
  const Eigen::Index na = layout.two_axis_count();
  if (coords.size() != n + 2 * na) throw ValidationError("energy coordinates have wrong length");
  return {coords.head(n), omega, coords.segment(n, na), coords.tail(na)};
}

double strain_energy(const SystemModel& model, const SystemState& state) {
  require_lossless(model);
  const Eigen::Index n = model.machine_count();
  Vector eq, ed;
  model.internal_emf(state, eq, ed);
  const Matrix& b = model.reduced.Bred;

  double coupling = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double p = eq(i) * eq(j) + ed(i) * ed(j);
      const double q = eq(i) * ed(j) - ed(i) * eq(j);
      const double d = state.delta(i) - state.delta(j);
      coupling += b(i, j) * (p * std::cos(d) - q * std::sin(d));
    }
  }
  const Vector s = flux_stiffness(model);
  const double quadratic =
      0.5 * (s.array() * (state.Eq.array().square() + state.Ed.array().square())).sum();
  return quadratic + 0.5 * coupling;
}

Vector strain_gradient(const SystemModel& model, const SystemState& state) {
  require_lossless(model);
  const auto& layout = model.layout;
  const Eigen::Index n = layout.machine_count;
  const Eigen::Index na = layout.two_axis_count();
  Vector eq, ed;
  model.internal_emf(state, eq, ed);
  const auto t = network_terms(model.reduced, state.delta, eq, ed);
  const Vector s = flux_stiffness(model);

  Vector grad(n + 2 * na);
  grad.head(n) = t.P;
  for (Eigen::Index a = 0; a < na; ++a) {
    const auto i = layout.two_axis[static_cast<std::size_t>(a)];
    grad(n + a) = s(a) * state.Eq(a) - t.gq(i);
    grad(n + na + a) = s(a) * state.Ed(a) - t.gd(i);
  }
  return grad;
}

EnergyReport hessian_U(const SystemModel& model, const SystemState& state) {
  require_lossless(model);
  const auto& layout = model.layout;
  const Eigen::Index n = layout.machine_count;
  const Eigen::Index na = layout.two_axis_count();
  Vector eq, ed;
  model.internal_emf(state, eq, ed);
  const Matrix& b = model.reduced.Bred;

  EnergyReport report;
  report.U = strain_energy(model, state);
  report.gradU = strain_gradient(model, state);
  Matrix& hess = report.hessU;
  hess = Matrix::Zero(n + 2 * na, n + 2 * na);

  auto eq_index = [&](Eigen::Index i) -> Eigen::Index {
    const auto slot = layout.flux_slot[static_cast<std::size_t>(i)];
    return slot < 0 ? -1 : n + slot;
  };
  auto ed_index = [&](Eigen::Index i) -> Eigen::Index {
    const auto slot = layout.flux_slot[static_cast<std::size_t>(i)];
    return slot < 0 ? -1 : n + na + slot;
  };

  // Each ordered pair contributes (1/2) B_ij f with f = p cos(theta) - q sin(theta),
  // p = Eqi Eqj + Edi Edj, q = Eqi Edj - Edi Eqj, theta = delta_i - delta_j.
  // Local variables: 0 delta_i, 1 delta_j, 2 Eqi, 3 Edi, 4 Eqj, 5 Edj.
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const double w = 0.5 * b(i, j);
      const double th = state.delta(i) - state.delta(j);
      const double c = std::cos(th);
      const double s = std::sin(th);
      const double p = eq(i) * eq(j) + ed(i) * ed(j);
      const double q = eq(i) * ed(j) - ed(i) * eq(j);
      const double f = p * c - q * s;

      const std::array<Eigen::Index, 6> index{i, j, eq_index(i), ed_index(i), eq_index(j),
                                              ed_index(j)};
      const std::array<double, 2> sign{1.0, -1.0};
      // derivatives of p and q with respect to local flux variables 2..5
      const std::array<double, 4> px{eq(j), ed(j), eq(i), ed(i)};
      const std::array<double, 4> qx{ed(j), -eq(j), -ed(i), eq(i)};
      // second derivatives: p_{Eqi,Eqj} = p_{Edi,Edj} = 1, q_{Eqi,Edj} = 1, q_{Edi,Eqj} = -1
      std::array<std::array<double, 4>, 4> pxy{};
      std::array<std::array<double, 4>, 4> qxy{};
      pxy[0][2] = pxy[2][0] = 1.0;
      pxy[1][3] = pxy[3][1] = 1.0;
      qxy[0][3] = qxy[3][0] = 1.0;
      qxy[1][2] = qxy[2][1] = -1.0;

      std::array<std::array<double, 6>, 6> local{};
      for (int a = 0; a < 2; ++a)
        for (int bb = 0; bb < 2; ++bb) local[a][bb] = -f * sign[a] * sign[bb];
      for (int a = 0; a < 2; ++a) {
        for (int x = 0; x < 4; ++x) {
          const double v = sign[a] * (-px[x] * s - qx[x] * c);
          local[a][2 + x] = v;
          local[2 + x][a] = v;
        }
      }
      for (int x = 0; x < 4; ++x)
        for (int y = 0; y < 4; ++y) local[2 + x][2 + y] = pxy[x][y] * c - qxy[x][y] * s;

      for (int a = 0; a < 6; ++a) {
        if (index[a] < 0) continue;
        for (int bb = 0; bb < 6; ++bb) {
          if (index[bb] < 0) continue;
          hess(index[a], index[bb]) += w * local[a][bb];
        }
      }
    }
  }
  const Vector stiffness = flux_stiffness(model);
  for (Eigen::Index a = 0; a < na; ++a) {
    const auto i = layout.two_axis[static_cast<std::size_t>(a)];
    hess(n + a, n + a) += stiffness(a) + b(i, i);
    hess(n + na + a, n + na + a) += stiffness(a) + b(i, i);
  }

  const Matrix deflated = deflate_angles(hess, n);
  report.lambda_min = deflated.rows() == 0 ? std::numeric_limits<double>::infinity()
                                           : sym_eigenvalues(deflated)(0);
  report.hess_psd = is_psd(deflated);
  return report;
}

double kinetic_energy(const SystemModel& model, const SystemState& state) {
  double k = 0.0;
  for (Eigen::Index slot = 0; slot < model.layout.inertial_count(); ++slot) {
    const auto i = model.layout.inertial[static_cast<std::size_t>(slot)];
    k += 0.5 * model.machines[static_cast<std::size_t>(i)].M * state.omega(slot) *
         state.omega(slot);
  }
  return model.omega0 * k;
}

StorageEvaluation bregman_storage(const SystemModel& model, const SystemState& state,
                                  const SystemState& z_star, const Vector& P_m_star) {
  require_lossless(model);
  const Vector z = energy_coordinates(model, state);
  const Vector zs = energy_coordinates(model, z_star);
  const Vector grad = strain_gradient(model, state);
  const Vector grad_star = strain_gradient(model, z_star);

  StorageEvaluation out;
  out.W = strain_energy(model, state) - strain_energy(model, z_star) - grad_star.dot(z - zs);

  const auto& layout = model.layout;
  const Vector dx = rhs(model, state.pack(layout), make_inputs(model, P_m_star));
  Vector zdot(z.size());
  zdot << dx.head(layout.machine_count), dx.tail(2 * layout.two_axis_count());
  out.dWdt = (grad - grad_star).dot(zdot);

  const Vector p = grad.head(layout.machine_count);
  const Vector p_star = grad_star.head(layout.machine_count);
  out.supply = zdot.head(layout.machine_count).dot(p - p_star);
  return out;
}

ClassicalEnergy classical_strain_energy(const Matrix& btilred, const Vector& V_fd,
                                        const Vector& delta) {
  const Eigen::Index n = btilred.rows();
  if (V_fd.size() != n || delta.size() != n)
    throw ValidationError("classical strain energy: dimension mismatch");
  ClassicalEnergy out;
  out.grad = Vector::Zero(n);
  out.hess = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double w = V_fd(i) * V_fd(j) * btilred(i, j);
      const double d = delta(i) - delta(j);
      out.U += 0.5 * w * std::cos(d);
      if (i == j) continue;
      out.grad(i) -= w * std::sin(d);
      out.hess(i, j) = w * std::cos(d);
    }
    out.hess(i, i) = -out.hess.row(i).sum();
  }
  const Matrix deflated = deflate_angles(out.hess, n);
  out.lambda_min = deflated.rows() == 0 ? std::numeric_limits<double>::infinity()
                                        : sym_eigenvalues(deflated)(0);
  out.psd = is_psd(deflated);
  return out;
}

Membership membership_E(const SystemModel& model, const SystemState& z_star) {
  require_lossless(model);
  const Eigen::Index n = model.machine_count();
  const Eigen::Index na = model.layout.two_axis_count();
  const auto report = hessian_U(model, z_star);

  Membership m;
  m.lambda_min_hess = report.lambda_min;
  m.in_E = report.lambda_min > tol::kInterior;

  // -Ahat is the flux block of the Hessian
  const Matrix ahat = -report.hessU.bottomRightCorner(2 * na, 2 * na);
  m.lambda_max_Ahat = na == 0 ? -std::numeric_limits<double>::infinity()
                              : sym_eigenvalues(ahat)(2 * na - 1);
  auto near = [](double v) { return std::abs(v) <= tol::kInterior; };
  m.near_boundary = near(m.lambda_min_hess) || near(m.lambda_max_Ahat);
  m.lambda_min_hess_classical = std::numeric_limits<double>::quiet_NaN();
  if (!model.btilred) return m;

  const auto classical = classical_strain_energy(*model.btilred, model.field_voltages(),
                                                 z_star.delta);
  m.lambda_min_hess_classical = classical.lambda_min;
  m.classical_form = m.lambda_max_Ahat < -tol::kInterior && classical.lambda_min > tol::kInterior;
  m.near_boundary = m.near_boundary || (n > 1 && near(classical.lambda_min));
  if (!m.near_boundary && m.in_E != *m.classical_form)
    throw ConsistencyError("equilibrium-set verdicts disagree: Hessian of U gives " +
                           std::string(m.in_E ? "inside" : "outside") +
                           ", (Ahat, Hessian of U~) gives " +
                           (*m.classical_form ? "inside" : "outside"));
  return m;
}

}  // namespace eipass
