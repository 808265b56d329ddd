#pragma once

#include <optional>
#include <span>
#include <vector>

#include "tikhonov/core.hpp"
#include "tikhonov/integrate.hpp"

namespace tikhonov {

class LayerSolution;

/// A root v = phi(u, t) of g(u, v, t, 0) = 0 with the derivative data of the
/// slow manifold at that root.
struct QssResult {
  Vector v_root;
  Matrix g_v;    // m x m
  Matrix g_u;    // m x n
  Matrix phi_u;  // m x n, solves g_v phi_u = -g_u
  Vector phi_t;  // m,     solves g_v phi_t = -g_t
  int newton_iters = 0;
  double residual = 0.0;
  /// Smallest LU pivot of g_v at the root relative to ||g_v||_inf.
  double min_pivot = 0.0;
};

struct QssOptions {
  double tol = 1e-12;
  int max_iters = 50;
};

/// Newton iteration on g(u, ., t, 0) from v_seed. Throws NoConvergence when
/// the seed is outside the Newton basin and SingularJacobian when g_v loses
/// rank along the way or at the root.
QssResult solve_qss(const FastSlowSystem& sys, const Vector& u, double t, const Vector& v_seed,
                    const QssOptions& opts = {});

/// Seed from the model's closed form when it has one, else zeros.
Vector default_qss_seed(const FastSlowSystem& sys, const Vector& u, double t);

/// f(u, phi(u, t), t, 0), or the model's reduced override when present.
Vector reduced_rhs(const FastSlowSystem& sys, const Vector& u, double t, const Vector& v_seed);

/// Reduced solution u_bar(t) together with the curve phi(u_bar(t), t).
struct SlowSolution {
  Trajectory traj;               // samples of u_bar
  std::vector<Vector> vbar;      // phi(u_bar(t_k), t_k) per sample
  std::vector<QssResult> qss_chain;

  Vector ubar_at(double t) const { return traj.at(t); }
  /// Linear interpolation of the stored phi chain; exact at samples.
  Vector vbar_at(double t) const;
  double t_first() const { return traj.t_first(); }
  double t_last() const { return traj.t_last(); }
  /// Smallest relative g_v pivot along the chain (A2 measurable).
  double min_pivot() const;
};

struct ReducedConfig {
  IntegratorConfig integrator = [] {
    IntegratorConfig c;
    c.rel_tol = 1e-10;
    c.abs_tol = 1e-12;
    return c;
  }();
  /// BoundednessViolation when ||u_bar|| or ||v_bar|| exceed this.
  double bound = 1e8;
  std::optional<Vector> v_seed;
  QssOptions qss;
};

/// Integrates the reduced equation on `grid` (first point is the initial
/// time), re-solving the QSS at every evaluation warm-started from the
/// previous root.
SlowSolution integrate_reduced(const FastSlowSystem& sys, const Vector& u0, std::span<const double> grid,
                               const ReducedConfig& cfg = {});

/// rk45 with max_step capped at eps/2, the layer time scale.
IntegratorConfig full_system_config(double eps, IntegratorConfig base = {});

/// Integrates the full stiff system in slow time; samples are concat(u, v).
Trajectory integrate_full(const FastSlowSystem& sys, const Vector& u0, const Vector& v0, double eps,
                          std::span<const double> grid, const IntegratorConfig& cfg);

/// phi(u_bar(t), t) + v_tilde_0(t / eps). The layer correction is taken as
/// zero beyond its computed span.
Vector composite_v(const SlowSolution& slow, const LayerSolution& layer, double eps, double t);

struct ErrorCurves {
  std::vector<double> t;
  std::vector<double> err_u;          // ||u_eps - u_bar||
  std::vector<double> err_v;          // ||v_eps - phi(u_bar, t)||
  std::vector<double> err_composite;  // ||v_eps - composite||
  double rho = 0.0;
  double t_rho = 0.0;                 // eps * tau_rho
  double sup_u_after_t_rho = 0.0;
  double sup_v_after_t_rho = 0.0;
  double sup_composite = 0.0;         // over all t

  /// Sup of one column over t in [lo, hi].
  static double sup_on(const std::vector<double>& t, const std::vector<double>& col, double lo, double hi);
};

/// Error columns of a full solution against the reduced/composite
/// approximation on `grid`. `full` samples are concat(u, v).
ErrorCurves error_curves(const Trajectory& full, const SlowSolution& slow, const LayerSolution& layer,
                         double eps, std::span<const double> grid, double rho = 1e-3);

}  // namespace tikhonov
