#include "test_support.hpp"

#include <eipass/dynamics.hpp>
#include <eipass/energy.hpp>
#include <eipass/equilibrium.hpp>
#include <eipass/errors.hpp>
#include <eipass/linear.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace eipass;
using eipass::testing::fd_derivative;
using eipass::testing::ieee9;
using eipass::testing::ieee9_cells;
using eipass::testing::rel_err;

namespace {

SystemState random_state(std::mt19937_64& rng, const SystemModel& model, double spread = 1.2) {
  std::uniform_real_distribution<double> angle(-spread, spread);
  std::uniform_real_distribution<double> emf(0.6, 1.2);
  std::uniform_real_distribution<double> small(-0.3, 0.3);
  const auto& layout = model.layout;
  SystemState s;
  s.delta = Vector::NullaryExpr(layout.machine_count, [&] { return angle(rng); });
  s.omega = Vector::Zero(layout.inertial_count());
  s.Eq = Vector::NullaryExpr(layout.two_axis_count(), [&] { return emf(rng); });
  s.Ed = Vector::NullaryExpr(layout.two_axis_count(), [&] { return small(rng); });
  return s;
}

SystemModel lossless_all_two_axis(std::mt19937_64& rng, std::size_t buses) {
  const auto lines = eipass::testing::random_lines(rng, buses, false);
  auto machines = eipass::testing::random_machines(rng, buses, buses);
  return make_model(std::move(machines), build_admittance(buses, lines));
}

std::function<double(const Vector&)> energy_of(const SystemModel& model, const Vector& omega) {
  return [&model, omega](const Vector& c) {
    return strain_energy(model, state_from_coordinates(model, c, omega));
  };
}

// Hessian by the second-order central stencil on U itself.
Matrix fd_hessian(const std::function<double(const Vector&)>& f, const Vector& x, double h) {
  const Eigen::Index n = x.size();
  Matrix hess(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      auto at = [&](double si, double sj) {
        Vector y = x;
        y(i) += si * h;
        y(j) += sj * h;
        return f(y);
      };
      const double v = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * h * h);
      hess(i, j) = v;
      hess(j, i) = v;
    }
  }
  return hess;
}

// Block form [L, -Bhat^T; -Bhat, -Ahat] in energy coordinates.
Matrix block_hessian(const LinearModel& lm) {
  const Eigen::Index n = lm.angle_count();
  const Eigen::Index m = lm.flux_count();
  Matrix h(n + m, n + m);
  h.topLeftCorner(n, n) = lm.L;
  h.topRightCorner(n, m) = -lm.Bhat.transpose();
  h.bottomLeftCorner(m, n) = -lm.Bhat;
  h.bottomRightCorner(m, m) = -lm.Ahat;
  return h;
}

// Angles whose pairwise gaps all stay within `gap`.
Vector clustered_angles(std::mt19937_64& rng, Eigen::Index n, double gap) {
  std::uniform_real_distribution<double> u(0.0, gap);
  std::uniform_real_distribution<double> shift(-3.0, 3.0);
  const double base = shift(rng);
  return Vector::NullaryExpr(n, [&] { return base + u(rng); });
}

}  // namespace

TEST(StrainEnergy, VanishesWithoutFlux) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const auto model = lossless_all_two_axis(rng, 5);
    auto s = random_state(rng, model);
    s.Eq.setZero();
    s.Ed.setZero();
    EXPECT_EQ(strain_energy(model, s), 0.0);
  }
}

TEST(StrainEnergy, InvariantUnderUniformAngleShift) {
  const auto& model = ieee9(true).model;
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    auto s = random_state(rng, model);
    const double u0 = strain_energy(model, s);
    s.delta.array() += 0.77;
    EXPECT_NEAR(strain_energy(model, s), u0, 1e-12 * std::max(1.0, std::abs(u0)));
  }
}

TEST(StrainEnergy, RejectsLossyNetwork) {
  const auto& model = ieee9().model;
  std::mt19937_64 rng(13);
  const auto s = random_state(rng, model);
  EXPECT_THROW(strain_energy(model, s), LossyNetworkError);
  EXPECT_THROW(hessian_U(model, s), LossyNetworkError);
}

TEST(StrainEnergy, AngleGradientIsActivePower) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 100; ++trial) {
    const auto model = trial % 2 == 0 ? ieee9(true).model : lossless_all_two_axis(rng, 4);
    const auto s = random_state(rng, model);
    const Vector grad = strain_gradient(model, s);
    const Vector P = active_power(model, s);
    const double scale = std::max(1.0, P.cwiseAbs().maxCoeff());
    EXPECT_LE((grad.head(model.machine_count()) - P).cwiseAbs().maxCoeff(), 1e-6 * scale);
  }
}

TEST(StrainEnergy, GradientMatchesCentralDifferences) {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 20; ++trial) {
    const auto& model = ieee9(true).model;
    const auto s = random_state(rng, model);
    const Vector c = energy_coordinates(model, s);
    const auto f = energy_of(model, s.omega);
    const Vector grad = strain_gradient(model, s);
    Vector fd(c.size());
    for (Eigen::Index i = 0; i < c.size(); ++i) fd(i) = fd_derivative(f, c, i, 1e-5);
    EXPECT_LE(rel_err(grad, fd), 1e-6);
  }
}

TEST(StrainEnergy, FluxGradientMatchesFieldDynamics) {
  // dU/dE_q = (V_fd - tau_d E_q') / (X - X'),  dU/dE_d = -tau_q E_d' / (X - X')
  const auto& model = ieee9(true).model;
  const auto& layout = model.layout;
  std::mt19937_64 rng(16);
  const Vector P_m = Vector::Zero(model.machine_count());
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = random_state(rng, model);
    const Vector dx = rhs(model, s.pack(layout), make_inputs(model, P_m));
    const Vector grad = strain_gradient(model, s);
    const Eigen::Index n = model.machine_count();
    const Eigen::Index m = layout.two_axis_count();
    for (Eigen::Index k = 0; k < m; ++k) {
      const auto& mc = model.machines[static_cast<std::size_t>(layout.two_axis[k])];
      const double span = mc.X - mc.Xprime;
      const double gq = (mc.V_fd - mc.tau_d * dx(layout.eq_offset() + k)) / span;
      const double gd = -mc.tau_q * dx(layout.ed_offset() + k) / span;
      EXPECT_NEAR(grad(n + k), gq, 1e-9 * std::max(1.0, std::abs(gq)));
      EXPECT_NEAR(grad(n + m + k), gd, 1e-9 * std::max(1.0, std::abs(gd)));
    }
  }
}

TEST(HessianU, MatchesFiniteDifferencesAndBlockAssembly) {
  const auto& model = ieee9(true).model;
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = random_state(rng, model);
    const auto report = hessian_U(model, s);
    const Vector c = energy_coordinates(model, s);
    const Matrix fd = fd_hessian(energy_of(model, s.omega), c, 1e-4);
    EXPECT_LE(rel_err(report.hessU, fd), 1e-4);
    const auto lm = linearize(model, s);
    EXPECT_LE((report.hessU - block_hessian(lm)).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE((report.hessU - report.hessU.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(HessianU, NonConvexPointExistsOnTheGrid) {
  bool found = false;
  for (const auto& cell : ieee9_cells(true)) {
    const auto report = hessian_U(ieee9(true).model, cell.equilibrium->z_star);
    if (report.lambda_min < -1e-3) {
      EXPECT_FALSE(report.hess_psd);
      found = true;
      break;
    }
  }
  EXPECT_TRUE(found);
}

TEST(Bregman, ZeroAtEquilibriumAndNonNegativeNearby) {
  const auto& model = ieee9(true).model;
  const auto eq = solve_equilibrium(model, grid_angles(0.1, 0.05));
  ASSERT_TRUE(eq.converged);
  ASSERT_TRUE(membership_E(model, eq.z_star).in_E);
  EXPECT_NEAR(bregman_storage(model, eq.z_star, eq.z_star, eq.P_m_star).W, 0.0, 1e-12);
  std::mt19937_64 rng(18);
  std::uniform_real_distribution<double> u(-0.02, 0.02);
  for (int trial = 0; trial < 200; ++trial) {
    SystemState z = eq.z_star;
    for (auto* v : {&z.delta, &z.Eq, &z.Ed})
      for (Eigen::Index i = 0; i < v->size(); ++i) (*v)(i) += u(rng);
    EXPECT_GE(bregman_storage(model, z, eq.z_star, eq.P_m_star).W, -1e-10);
  }
}

TEST(Bregman, DissipationInequalityAlongTrajectory) {
  const auto& model = ieee9(true).model;
  const auto eq = solve_equilibrium(model, grid_angles(0.1, 0.05));
  ASSERT_TRUE(eq.converged);
  auto z0 = eq.z_star;
  z0.delta(3) += 0.05;
  z0.delta(5) -= 0.04;
  z0.Eq(1) += 0.03;
  const auto traj = integrate(model, z0.pack(model.layout), make_inputs(model, eq.P_m_star), 0.0,
                              3.0, 0.01);
  ASSERT_GT(traj.x.size(), 100u);
  for (const auto& x : traj.x) {
    const auto ev = bregman_storage(model, SystemState::unpack(model.layout, x), eq.z_star,
                                    eq.P_m_star);
    EXPECT_LE(ev.dWdt, ev.supply + 1e-6);
  }
}

TEST(ClassicalEnergy, GradientVanishesAtUniformAngles) {
  const auto& model = ieee9(true).model;
  ASSERT_TRUE(model.btilred.has_value());
  const Vector delta = Vector::Constant(model.machine_count(), 0.4);
  const auto ce = classical_strain_energy(*model.btilred, model.field_voltages(), delta);
  EXPECT_LE(ce.grad.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ClassicalEnergy, HessianMatchesFiniteDifferencesAndIsALaplacian) {
  const auto& model = ieee9(true).model;
  const Matrix& bt = *model.btilred;
  const Vector vfd = model.field_voltages();
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 10; ++trial) {
    const Vector delta = clustered_angles(rng, model.machine_count(), 3.0);
    const auto ce = classical_strain_energy(bt, vfd, delta);
    const auto f = [&](const Vector& d) { return classical_strain_energy(bt, vfd, d).U; };
    EXPECT_LE(rel_err(ce.hess, fd_hessian(f, delta, 1e-4)), 1e-4);
    EXPECT_LE(ce.hess.rowwise().sum().cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ClassicalEnergy, ConvexWhenAngleGapsWithinQuarterTurn) {
  std::mt19937_64 rng(20);
  for (int trial = 0; trial < 500; ++trial) {
    const bool table = trial % 2 == 0;
    const SystemModel model = table ? ieee9(true).model : lossless_all_two_axis(rng, 6);
    if (!model.btilred) continue;
    const Vector delta = clustered_angles(rng, model.machine_count(), std::numbers::pi / 2);
    const auto ce = classical_strain_energy(*model.btilred, model.field_voltages(), delta);
    EXPECT_GE(ce.lambda_min, -1e-10);
  }
}

TEST(ClassicalEnergy, WideGapCanBreakConvexity) {
  // two machines opposite each other: the single edge weight changes sign
  const auto& model = ieee9(true).model;
  Vector delta = Vector::Zero(model.machine_count());
  delta(1) = 2.8;
  const auto ce = classical_strain_energy(*model.btilred, model.field_voltages(), delta);
  EXPECT_LT(ce.lambda_min, 0.0);
  EXPECT_FALSE(ce.psd);
}

TEST(ClassicalEnergy, HessianEqualsTorqueCoefficientsAtEquilibria) {
  const auto& model = ieee9(true).model;
  int checked = 0;
  for (const auto& cell : ieee9_cells(true, 15)) {
    const auto lm = linearize(model, cell.equilibrium->z_star);
    if (!lm.L0_defined) continue;
    const auto ce = classical_strain_energy(*model.btilred, model.field_voltages(),
                                            cell.equilibrium->z_star.delta);
    EXPECT_LE((ce.hess - lm.L0).cwiseAbs().maxCoeff(), 1e-8);
    ++checked;
  }
  EXPECT_GE(checked, 20);
}

TEST(Membership, NearUniformEquilibriumIsInside) {
  const auto& model = ieee9(true).model;
  const auto eq = solve_equilibrium(model, grid_angles(0.05, -0.05));
  ASSERT_TRUE(eq.converged);
  const auto m = membership_E(model, eq.z_star);
  EXPECT_TRUE(m.in_E);
  EXPECT_LT(m.lambda_max_Ahat, 0.0);
  ASSERT_TRUE(m.classical_form.has_value());
  EXPECT_TRUE(*m.classical_form);
}

TEST(Membership, UnstableFluxModeIsOutside) {
  // heavy line charging with a large synchronous reactance: beta X > 1
  std::vector<LineParams> lines(1);
  lines[0].from_bus = 0;
  lines[0].to_bus = 1;
  lines[0].b = -4.0;
  lines[0].c = 0.02;
  std::vector<MachineParams> machines(2);
  for (auto& m : machines) {
    m.kind = MachineKind::TwoAxis;
    m.M = 0.1;
    m.D = 0.02;
    m.X = 2.0;
    m.Xprime = 0.2;
    m.tau_d = 5.0;
    m.tau_q = 0.5;
    m.V_fd = 1.0;
  }
  const auto model = make_model(machines, build_admittance(2, lines));
  EXPECT_FALSE(model.btilred.has_value());
  const auto eq = solve_equilibrium(model, {0.0, 0.1});
  ASSERT_TRUE(eq.converged) << eq.reason;
  const auto m = membership_E(model, eq.z_star);
  EXPECT_GT(m.lambda_max_Ahat, 0.0);
  EXPECT_FALSE(m.in_E);
  EXPECT_FALSE(m.classical_form.has_value());
  EXPECT_TRUE(std::isnan(m.lambda_min_hess_classical));
}

TEST(Membership, VerdictFlipsWithTheHessianSignAlongARay) {
  const auto& model = ieee9(true).model;
  bool inside_seen = false;
  bool outside_seen = false;
  std::optional<SystemState> guess;
  for (int k = 0; k <= 60; ++k) {
    const double t = 0.05 * k;
    const auto eq = solve_equilibrium(model, grid_angles(t, 0.5 * t), guess);
    if (!eq.converged) break;
    guess = eq.z_star;
    const auto m = membership_E(model, eq.z_star);
    EXPECT_EQ(m.in_E, m.lambda_min_hess > tol::kInterior);
    (m.in_E ? inside_seen : outside_seen) = true;
  }
  EXPECT_TRUE(inside_seen);
  EXPECT_TRUE(outside_seen);
}

TEST(Membership, EquivalentVerdictsAgreeOnTheGrid) {
  const auto& model = ieee9(true).model;
  int compared = 0;
  for (const auto& cell : ieee9_cells(true)) {
    const auto& z = cell.equilibrium->z_star;
    const auto m = membership_E(model, z);
    if (m.near_boundary) continue;
    const auto lm = linearize(model, z);
    ASSERT_TRUE(lm.L0_defined);
    const bool ahat_nd = sym_eigenvalues(lm.Ahat).maxCoeff() < -tol::kInterior;
    const double l0_min = sym_eigenvalues(deflate_angles(lm.L0, lm.angle_count())).minCoeff();
    if (std::abs(l0_min) < tol::kInterior) continue;
    EXPECT_EQ(m.in_E, ahat_nd && l0_min > 0.0);
    ASSERT_TRUE(m.classical_form.has_value());
    EXPECT_EQ(m.in_E, *m.classical_form);
    ++compared;
  }
  EXPECT_GE(compared, 50);
}

TEST(Membership, RejectsLossyNetwork) {
  const auto& model = ieee9().model;
  const auto eq = solve_equilibrium(model, grid_angles(0.1, 0.05));
  EXPECT_THROW(membership_E(model, eq.z_star), LossyNetworkError);
}
