#include "eipass/integrator.hpp"

#include "eipass/errors.hpp"

#include <boost/numeric/odeint.hpp>
#include <boost/numeric/odeint/external/eigen/eigen.hpp>

#include <cmath>

namespace eipass {

namespace odeint = boost::numeric::odeint;

Trajectory integrate_ode(const OdeFunction& f, const Vector& x0, double t0, double t1,
                         double dt_sample, const IntegratorOptions& options) {
  if (!std::isfinite(t0) || !std::isfinite(t1)) throw ValidationError("time span must be finite");
  if (!(dt_sample > 0.0)) throw ValidationError("sample interval must be positive");

  using Stepper = odeint::runge_kutta_dopri5<Vector, double, Vector, double,
                                             odeint::vector_space_algebra>;
  auto dense = odeint::make_dense_output(options.abs_tol, options.rel_tol, Stepper());
  auto system = [&f](const Vector& x, Vector& dxdt, double t) { f(t, x, dxdt); };

  const double direction = t1 >= t0 ? 1.0 : -1.0;
  const double span = std::abs(t1 - t0);
  const auto sample_count = static_cast<std::size_t>(std::floor(span / dt_sample + 1e-9));

  Trajectory traj;
  traj.t.reserve(sample_count + 2);
  traj.x.reserve(sample_count + 2);
  traj.t.push_back(t0);
  traj.x.push_back(x0);
  if (span == 0.0) return traj;

  dense.initialize(x0, t0, direction * std::min(options.initial_step, span));
  Vector sample(x0.size());
  auto past = [direction](double a, double b) { return direction * (a - b) >= 0.0; };

  auto emit = [&](double ts) {
    while (!past(dense.current_time(), ts)) {
      try {
        dense.do_step(system);
      } catch (const odeint::odeint_error& e) {
        throw IntegrationError(std::string("step rejected repeatedly: ") + e.what(),
                               dense.current_time());
      }
      ++traj.accepted_steps;
      const double h = std::abs(dense.current_time_step());
      if (!(h >= options.min_step) || !dense.current_state().allFinite())
        throw IntegrationError("step size underflow", dense.current_time());
      if (traj.accepted_steps > options.max_steps)
        throw IntegrationError("maximum number of steps exceeded", dense.current_time());
    }
    dense.calc_state(ts, sample);
    traj.t.push_back(ts);
    traj.x.push_back(sample);
  };

  for (std::size_t k = 1; k <= sample_count; ++k) {
    const double ts = t0 + direction * static_cast<double>(k) * dt_sample;
    if (std::abs(ts - t1) < 1e-12 * std::max(1.0, span)) break;
    emit(ts);
  }
  emit(t1);
  return traj;
}

}  // namespace eipass
