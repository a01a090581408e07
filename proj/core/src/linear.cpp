#include "eipass/linear.hpp"

#include "eipass/dynamics.hpp"
#include "eipass/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace eipass {

LinearModel linearize(const SystemModel& model, const SystemState& z_star) {
  const auto& layout = model.layout;
  const Eigen::Index n = layout.machine_count;
  const Eigen::Index na = layout.two_axis_count();
  Vector eq, ed;
  model.internal_emf(z_star, eq, ed);
  const auto jac = network_jacobian(model.reduced, z_star.delta, eq, ed);
  const Matrix& k = jac.kh.k;
  const Matrix& h = jac.kh.h;

  LinearModel lm;
  lm.at = z_star;
  lm.L = jac.dP_ddelta;
  lm.tau.resize(2 * na);
  lm.Ahat.resize(2 * na, 2 * na);
  lm.Bhat.resize(2 * na, n);
  lm.C.resize(n, 2 * na);
  Vector gap(2 * na);

  for (Eigen::Index a = 0; a < na; ++a) {
    const auto i = layout.two_axis[static_cast<std::size_t>(a)];
    const auto& m = model.machines[static_cast<std::size_t>(i)];
    lm.tau(a) = m.tau_d;
    lm.tau(na + a) = m.tau_q;
    gap(a) = gap(na + a) = m.X - m.Xprime;
    lm.C.col(a) = jac.dP_dEq.col(i);
    lm.C.col(na + a) = jac.dP_dEd.col(i);
    lm.Bhat.row(a) = jac.dgq_ddelta.row(i);
    lm.Bhat.row(na + a) = jac.dgd_ddelta.row(i);
    for (Eigen::Index b = 0; b < na; ++b) {
      const auto j = layout.two_axis[static_cast<std::size_t>(b)];
      lm.Ahat(a, b) = k(i, j);
      lm.Ahat(a, na + b) = -h(i, j);
      lm.Ahat(na + a, b) = h(i, j);
      lm.Ahat(na + a, na + b) = k(i, j);
    }
    const double stiffness = m.X / (m.Xprime * (m.X - m.Xprime));
    lm.Ahat(a, a) -= stiffness;
    lm.Ahat(na + a, na + a) -= stiffness;
  }
  lm.A = gap.asDiagonal() * lm.Ahat;
  lm.B = gap.asDiagonal() * lm.Bhat;

  if (na == 0) {
    lm.L0 = lm.L;
    lm.L0_defined = true;
  } else {
    Eigen::PartialPivLU<Matrix> lu(lm.A);
    if (lu.rcond() >= tol::kSingularRcond) {
      lm.L0 = lm.L - lm.C * lu.solve(lm.B);
      lm.L0_defined = true;
    }
  }
  return lm;
}

TransferValue transfer_eval(const LinearModel& lm, Complex s) {
  const Eigen::Index nf = lm.flux_count();
  TransferValue out;
  out.Hhat = -lm.L.cast<Complex>();
  if (nf > 0) {
    CMatrix pencil = -lm.A.cast<Complex>();
    pencil.diagonal() += s * lm.tau.cast<Complex>();
    Eigen::PartialPivLU<CMatrix> lu(pencil);
    if (!(lu.rcond() >= tol::kSingularRcond))
      throw SingularityError("transfer matrix evaluated at a pole");
    out.Hhat -= lm.C.cast<Complex>() * lu.solve(lm.B.cast<Complex>());
  }
  if (std::abs(s) == 0.0) throw SingularityError("H has a pole at the origin");
  out.H = -out.Hhat / s;
  return out;
}

Vector log_frequency_grid(double w_min, double w_max, std::size_t points) {
  if (!(w_min > 0.0) || !(w_max > w_min) || points < 2)
    throw ValidationError("frequency grid needs 0 < w_min < w_max and at least 2 points");
  const double a = std::log10(w_min);
  const double b = std::log10(w_max);
  Vector grid(static_cast<Eigen::Index>(points));
  for (Eigen::Index i = 0; i < grid.size(); ++i)
    grid(i) = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1));
  return grid;
}

namespace {

bool hhat_stable(const LinearModel& lm) {
  if (lm.flux_count() == 0) return true;
  const Matrix poles = lm.tau.cwiseInverse().asDiagonal() * lm.A;
  return spectral_abscissa(poles) < 0.0;
}

template <class Fn>
void scan_grid(FreqCertificate& cert, const Vector& grid, Fn hermitian_at) {
  cert.worst_lambda = std::numeric_limits<double>::infinity();
  bool ok = true;
  for (const double w : grid) {
    const CMatrix m = hermitian_at(w);
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
    const double lambda = solver.eigenvalues()(0);
    const double tol = 1e-8 * std::max(1.0, m.cwiseAbs().maxCoeff());
    cert.tolerance = std::max(cert.tolerance, tol);
    cert.samples.push_back({w, lambda});
    if (lambda < cert.worst_lambda) {
      cert.worst_lambda = lambda;
      cert.worst_omega = w;
    }
    if (lambda < -tol) ok = false;
  }
  cert.verdict = ok;
  if (!ok) cert.reason = "negative eigenvalue at w = " + std::to_string(cert.worst_omega);
}

}  // namespace

FreqCertificate certify_negative_imaginary(const LinearModel& lm, const Vector& grid) {
  FreqCertificate cert;
  cert.property = FreqProperty::NegativeImaginary;
  if (!hhat_stable(lm)) {
    cert.verdict = false;
    cert.reason = "unstable Hhat";
    return cert;
  }
  const Complex j(0.0, 1.0);
  scan_grid(cert, grid, [&](double w) {
    const CMatrix hh = transfer_eval(lm, j * w).Hhat;
    return CMatrix(j * (hh - hh.adjoint()));
  });
  return cert;
}

FreqCertificate certify_positive_real(const LinearModel& lm, const Vector& grid) {
  FreqCertificate cert;
  cert.property = FreqProperty::PositiveReal;
  if (!hhat_stable(lm)) {
    cert.verdict = false;
    cert.residue_check = false;
    cert.reason = "unstable Hhat";
    return cert;
  }
  const Complex j(0.0, 1.0);
  scan_grid(cert, grid, [&](double w) {
    const CMatrix h = transfer_eval(lm, j * w).H;
    return CMatrix(h + h.adjoint());
  });

  if (!lm.L0_defined) {
    cert.residue_check = false;
  } else {
    const double scale = std::max(1.0, max_abs(lm.L0));
    const bool symmetric = max_abs(lm.L0 - lm.L0.transpose()) <= 1e-9 * scale;
    cert.residue_check = symmetric && is_psd(deflate_angles(lm.L0, lm.angle_count()));
  }
  if (!cert.residue_check) {
    if (cert.verdict) cert.reason = "residue L0 at the origin is not symmetric PSD";
    cert.verdict = false;
  }
  return cert;
}

TorqueCoefficients torque_coefficient_matrix(const LinearModel& lm) {
  if (!lm.L0_defined) throw SingularityError("A is singular; L0 is undefined");
  TorqueCoefficients out;
  out.L0 = lm.L0;
  out.sym_gap = max_abs(lm.L0 - lm.L0.transpose());
  out.deflated_eigs = eigenvalues(deflate_angles(lm.L0, lm.angle_count()));
  out.positive_eig_product = positive_eigen_product(out.deflated_eigs, tol::kInterior);
  return out;
}

}  // namespace eipass
