#pragma once

#include "eipass/linalg.hpp"

#include <functional>
#include <vector>

namespace eipass {

struct IntegratorOptions {
  double abs_tol = 1e-9;
  double rel_tol = 1e-7;
  double initial_step = 1e-4;
  /// Steps smaller than this abort the integration.
  double min_step = 1e-12;
  std::size_t max_steps = 50'000'000;
};

struct Trajectory {
  std::vector<double> t;
  std::vector<Vector> x;
  std::size_t accepted_steps = 0;

  std::size_t size() const { return t.size(); }
};

using OdeFunction = std::function<void(double t, const Vector& x, Vector& dxdt)>;

/// Adaptive Dormand-Prince 5(4) integration with dense output. Samples are
/// taken at t0, t0 + dt, ..., and always at t1. Throws IntegrationError on
/// step-size underflow.
Trajectory integrate_ode(const OdeFunction& f, const Vector& x0, double t0, double t1,
                         double dt_sample, const IntegratorOptions& options = {});

}  // namespace eipass
