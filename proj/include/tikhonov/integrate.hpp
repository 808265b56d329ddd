#pragma once

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "tikhonov/core.hpp"

namespace tikhonov {

enum class Method { rk4_fixed, rk45_adaptive, backward_euler };

const char* to_string(Method method);
Method parse_method(const std::string& name);

struct IntegratorConfig {
  Method method = Method::rk45_adaptive;
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  /// Upper step bound. rk4_fixed and backward_euler use it as their step.
  double max_step = std::numeric_limits<double>::infinity();
  double min_step = 1e-14;
  long max_steps = 100'000'000;
  /// 0 selects the starting step automatically (rk45 only).
  double initial_step = 0.0;
  /// Scale every component's error by the largest component instead of its
  /// own size, so entries crossing zero do not stall a tiny abs_tol.
  bool normwise_error = false;

  void validate() const;
};

using Rhs = std::function<Vector(double t, const Vector& y)>;
using RhsJacobian = std::function<Matrix(double t, const Vector& y)>;

/// Integrates y' = rhs(t, y) from t0 to t1 (t1 > t0).
///
/// Steps are clipped so that every point of `output_grid` is hit exactly,
/// and the returned trajectory holds the solution at those points. With an
/// empty grid every accepted step is recorded. Backward Euler solves its
/// implicit stage with damped Newton iterations on the LU kernel, using
/// `jac` when given and central differences otherwise.
///
/// Throws StepUnderflow, MaxStepsExceeded or NonFiniteState.
Trajectory integrate(const Rhs& rhs, const Vector& y0, double t0, double t1,
                     const IntegratorConfig& cfg, std::span<const double> output_grid = {},
                     const RhsJacobian& jac = {});

/// t0, t0 + dt, ..., t1 (the last point is always exactly t1).
std::vector<double> uniform_grid(double t0, double t1, double dt);

}  // namespace tikhonov
