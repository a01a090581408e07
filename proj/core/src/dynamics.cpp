#include "eipass/dynamics.hpp"

#include "eipass/errors.hpp"

#include <cmath>
#include <memory>

namespace eipass {
namespace {

// gamma^{-1} = j Y^red = -B^red + j G^red
CMatrix gamma_inverse(const ReducedNetwork& red) {
  CMatrix gi(red.size(), red.size());
  gi.real() = -red.Bred;
  gi.imag() = red.Gred;
  return gi;
}

struct Workspace {
  CMatrix gamma_inv;
  CVector rot;
  CVector eps;
  CVector phi;
  Vector eq;
  Vector ed;

  explicit Workspace(const SystemModel& model)
      : gamma_inv(gamma_inverse(model.reduced)),
        rot(model.machine_count()),
        eps(model.machine_count()),
        phi(model.machine_count()),
        eq(model.machine_count()),
        ed(model.machine_count()) {}
};

// phi_i = g_qi + j g_di = e^{j delta_i} sum_j gamma^{-1}_ij e^{-j delta_j} eps_j
void evaluate_phi(const CMatrix& gamma_inv, const Eigen::Ref<const Vector>& delta,
                  const Vector& eq, const Vector& ed, CVector& rot, CVector& eps, CVector& phi) {
  const Eigen::Index n = delta.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    rot(i) = Complex(std::cos(delta(i)), std::sin(delta(i)));
    eps(i) = std::conj(rot(i)) * Complex(eq(i), ed(i));
  }
  phi.noalias() = gamma_inv * eps;
  phi.array() *= rot.array();
}

void emf_from_packed(const SystemModel& model, const Vector& x, Vector& eq, Vector& ed) {
  const auto& layout = model.layout;
  for (Eigen::Index i = 0; i < layout.machine_count; ++i) {
    const auto slot = layout.flux_slot[static_cast<std::size_t>(i)];
    if (slot >= 0) {
      eq(i) = x(layout.eq_offset() + slot);
      ed(i) = x(layout.ed_offset() + slot);
    } else {
      eq(i) = model.machines[static_cast<std::size_t>(i)].V_fd;
      ed(i) = 0.0;
    }
  }
}

void evaluate_rhs(const SystemModel& model, const Vector& x, const Inputs& inputs, Vector& dx,
                  Workspace& w) {
  const auto& layout = model.layout;
  const Eigen::Index n = layout.machine_count;
  emf_from_packed(model, x, w.eq, w.ed);
  evaluate_phi(w.gamma_inv, x.head(n), w.eq, w.ed, w.rot, w.eps, w.phi);

  dx.resize(x.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& m = model.machines[static_cast<std::size_t>(i)];
    const double gq = w.phi(i).real();
    const double gd = w.phi(i).imag();
    const double p = w.eq(i) * gd - w.ed(i) * gq;
    const auto oslot = layout.omega_slot[static_cast<std::size_t>(i)];
    if (oslot >= 0) {
      const double omega = x(layout.omega_offset() + oslot);
      dx(i) = model.omega0 * omega;
      dx(layout.omega_offset() + oslot) = (-m.D * omega - p + inputs.P_m(i)) / m.M;
    } else {
      dx(i) = model.omega0 * (inputs.P_m(i) - p) / m.D;
    }
    const auto fslot = layout.flux_slot[static_cast<std::size_t>(i)];
    if (fslot >= 0) {
      const double ratio = m.X / m.Xprime;
      const double gap = m.X - m.Xprime;
      dx(layout.eq_offset() + fslot) = (-ratio * w.eq(i) + gap * gq + inputs.V_fd(i)) / m.tau_d;
      dx(layout.ed_offset() + fslot) = (-ratio * w.ed(i) + gap * gd) / m.tau_q;
    }
  }
}

void check_inputs(const SystemModel& model, const Inputs& inputs) {
  if (inputs.P_m.size() != model.machine_count() || inputs.V_fd.size() != model.machine_count())
    throw ValidationError("inputs must have one entry per machine");
}

}  // namespace

CouplingKH coupling_kh(const ReducedNetwork& red, const Vector& delta) {
  const Eigen::Index n = red.size();
  if (delta.size() != n) throw ValidationError("angle vector does not match network size");
  CouplingKH out{Matrix(n, n), Matrix(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double d = delta(i) - delta(j);
      const double c = std::cos(d);
      const double s = std::sin(d);
      out.k(i, j) = -red.Bred(i, j) * c - red.Gred(i, j) * s;
      out.h(i, j) = -red.Bred(i, j) * s + red.Gred(i, j) * c;
    }
  }
  return out;
}

NetworkTerms network_terms(const ReducedNetwork& red, const Vector& delta, const Vector& eq,
                           const Vector& ed) {
  const Eigen::Index n = red.size();
  if (delta.size() != n || eq.size() != n || ed.size() != n)
    throw ValidationError("state vectors do not match network size");
  CVector rot(n), eps(n), phi(n);
  evaluate_phi(gamma_inverse(red), delta, eq, ed, rot, eps, phi);
  NetworkTerms out;
  out.gq = phi.real();
  out.gd = phi.imag();
  out.P = eq.cwiseProduct(out.gd) - ed.cwiseProduct(out.gq);
  return out;
}

NetworkJacobian network_jacobian(const ReducedNetwork& red, const Vector& delta, const Vector& eq,
                                 const Vector& ed) {
  const Eigen::Index n = red.size();
  NetworkJacobian jac;
  jac.kh = coupling_kh(red, delta);
  const auto terms = network_terms(red, delta, eq, ed);
  const Matrix& k = jac.kh.k;
  const Matrix& h = jac.kh.h;

  jac.dgq_ddelta = Matrix::Zero(n, n);
  jac.dgd_ddelta = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      // c_ij = (k_ij + j h_ij) eps_j and d c_ij / d delta_j = -j c_ij
      const double re = k(i, j) * eq(j) - h(i, j) * ed(j);
      const double im = h(i, j) * eq(j) + k(i, j) * ed(j);
      jac.dgq_ddelta(i, j) = im;
      jac.dgd_ddelta(i, j) = -re;
    }
    jac.dgq_ddelta(i, i) = -jac.dgq_ddelta.row(i).sum();
    jac.dgd_ddelta(i, i) = -jac.dgd_ddelta.row(i).sum();
  }

  jac.dP_ddelta = eq.asDiagonal() * jac.dgd_ddelta - ed.asDiagonal() * jac.dgq_ddelta;
  jac.dP_dEq = eq.asDiagonal() * h - ed.asDiagonal() * k;
  jac.dP_dEd = eq.asDiagonal() * k + ed.asDiagonal() * h;
  jac.dP_dEq.diagonal() += terms.gd;
  jac.dP_dEd.diagonal() -= terms.gq;
  return jac;
}

Vector active_power(const SystemModel& model, const SystemState& state) {
  Vector eq, ed;
  model.internal_emf(state, eq, ed);
  return network_terms(model.reduced, state.delta, eq, ed).P;
}

VoltageTerms voltage_terms(const SystemModel& model, const SystemState& state) {
  Vector eq, ed;
  model.internal_emf(state, eq, ed);
  auto terms = network_terms(model.reduced, state.delta, eq, ed);
  return {std::move(terms.gq), std::move(terms.gd)};
}

Vector reactive_power(const SystemModel& model, const SystemState& state) {
  Vector eq, ed;
  model.internal_emf(state, eq, ed);
  const auto t = network_terms(model.reduced, state.delta, eq, ed);
  const Vector& x = model.reduced.reactances;
  return (eq.cwiseProduct(t.gq) + ed.cwiseProduct(t.gd)).array() -
         x.array() * (t.gq.array().square() + t.gd.array().square());
}

Inputs make_inputs(const SystemModel& model, const Vector& P_m) {
  if (P_m.size() != model.machine_count())
    throw ValidationError("P_m must have one entry per machine");
  return {P_m, model.field_voltages()};
}

Vector rhs(const SystemModel& model, const Vector& x, const Inputs& inputs) {
  Vector dx;
  rhs_into(model, x, inputs, dx);
  return dx;
}

void rhs_into(const SystemModel& model, const Vector& x, const Inputs& inputs, Vector& dx) {
  if (x.size() != model.layout.size()) throw ValidationError("state vector has wrong length");
  check_inputs(model, inputs);
  Workspace w(model);
  evaluate_rhs(model, x, inputs, dx, w);
}

Vector flux_residual(const SystemModel& model, const SystemState& state, const Vector& V_fd) {
  const auto& layout = model.layout;
  const auto v = voltage_terms(model, state);
  const Eigen::Index na = layout.two_axis_count();
  Vector r(2 * na);
  for (Eigen::Index a = 0; a < na; ++a) {
    const auto i = layout.two_axis[static_cast<std::size_t>(a)];
    const auto& m = model.machines[static_cast<std::size_t>(i)];
    const double ratio = m.X / m.Xprime;
    const double gap = m.X - m.Xprime;
    r(a) = -ratio * state.Eq(a) + gap * v.gq(i) + V_fd(i);
    r(na + a) = -ratio * state.Ed(a) + gap * v.gd(i);
  }
  return r;
}

Trajectory integrate(const SystemModel& model, const Vector& x0, const Inputs& inputs, double t0,
                     double t1, double dt_sample, const IntegratorOptions& options) {
  if (x0.size() != model.layout.size()) throw ValidationError("state vector has wrong length");
  check_inputs(model, inputs);
  auto work = std::make_shared<Workspace>(model);
  OdeFunction f = [&model, &inputs, work](double, const Vector& x, Vector& dx) {
    evaluate_rhs(model, x, inputs, dx, *work);
  };
  return integrate_ode(f, x0, t0, t1, dt_sample, options);
}

}  // namespace eipass
