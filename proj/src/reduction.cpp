#include "tikhonov/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tikhonov/layer.hpp"
#include "tikhonov/smalldense.hpp"

namespace tikhonov {

namespace {

double max_abs(const Vector& x) { return x.size() == 0 ? 0.0 : x.cwiseAbs().maxCoeff(); }

}  // namespace

QssResult solve_qss(const FastSlowSystem& sys, const Vector& u, double t, const Vector& v_seed,
                    const QssOptions& opts) {
  if (v_seed.size() != sys.m) throw Error("solve_qss: seed has the wrong dimension");
  Vector v = v_seed;
  State s{t, u, v};
  Vector r = eval_g(sys, u, v, t, 0.0);
  int iters = 0;
  while (max_abs(r) > opts.tol) {
    if (iters >= opts.max_iters) {
      throw NoConvergence("solve_qss: Newton did not reach ||g|| <= tol in " +
                          std::to_string(opts.max_iters) + " iterations");
    }
    s.v = v;
    dense::Lu<double> lu(jacobian(sys, Partial::g_v, s, 0.0));
    if (lu.singular()) throw SingularJacobian("solve_qss: g_v is singular during Newton iteration");
    const Vector step = lu.solve(r);
    v -= step;
    ++iters;
    if (!v.allFinite()) throw NoConvergence("solve_qss: Newton iterate became non-finite");
    r = eval_g(sys, u, v, t, 0.0);
    // Roundoff floor: the update no longer moves v and g is tiny anyway.
    if (max_abs(step) <= 4e-16 * (1.0 + max_abs(v)) && max_abs(r) <= 1e3 * opts.tol) break;
  }

  QssResult out;
  out.v_root = v;
  out.newton_iters = iters;
  out.residual = max_abs(r);
  s.v = v;
  out.g_v = jacobian(sys, Partial::g_v, s, 0.0);
  out.g_u = jacobian(sys, Partial::g_u, s, 0.0);
  dense::Lu<double> lu(out.g_v);
  out.min_pivot = lu.relative_min_pivot();
  if (lu.singular()) throw SingularJacobian("solve_qss: g_v is singular at the root (root not isolated)");
  out.phi_u = -lu.solve(out.g_u);
  out.phi_t = -lu.solve(jacobian(sys, Partial::g_t, s, 0.0)).col(0);
  return out;
}

Vector default_qss_seed(const FastSlowSystem& sys, const Vector& u, double t) {
  if (sys.qss_seed) return sys.qss_seed(u, t);
  return Vector::Zero(sys.m);
}

Vector reduced_rhs(const FastSlowSystem& sys, const Vector& u, double t, const Vector& v_seed) {
  if (sys.reduced_override) return sys.reduced_override(u, t);
  const QssResult q = solve_qss(sys, u, t, v_seed);
  return eval_f(sys, u, q.v_root, t, 0.0);
}

Vector SlowSolution::vbar_at(double t) const {
  const auto& ts = traj.times();
  if (t <= ts.front()) return vbar.front();
  if (t >= ts.back()) return vbar.back();
  const auto it = std::upper_bound(ts.begin(), ts.end(), t);
  const std::size_t hi = static_cast<std::size_t>(it - ts.begin());
  const std::size_t lo = hi - 1;
  if (ts[lo] == t) return vbar[lo];
  const double w = (t - ts[lo]) / (ts[hi] - ts[lo]);
  return (1.0 - w) * vbar[lo] + w * vbar[hi];
}

double SlowSolution::min_pivot() const {
  double out = std::numeric_limits<double>::infinity();
  for (const auto& q : qss_chain) out = std::min(out, q.min_pivot);
  return out;
}

SlowSolution integrate_reduced(const FastSlowSystem& sys, const Vector& u0, std::span<const double> grid,
                               const ReducedConfig& cfg) {
  sys.validate();
  if (grid.size() < 2) throw Error("integrate_reduced: grid needs at least two points");
  if (u0.size() != sys.n) throw Error("integrate_reduced: u0 has the wrong dimension");
  const double t0 = grid.front();
  Vector seed = cfg.v_seed ? *cfg.v_seed : default_qss_seed(sys, u0, t0);
  // Validate the starting root before integrating; this is where an A2
  // failure at the initial point surfaces.
  const QssResult first = solve_qss(sys, u0, t0, seed, cfg.qss);

  Vector warm = first.v_root;
  Rhs rhs = [&](double t, const Vector& u) -> Vector {
    if (sys.reduced_override) return sys.reduced_override(u, t);
    const QssResult q = solve_qss(sys, u, t, warm, cfg.qss);
    warm = q.v_root;
    return eval_f(sys, u, q.v_root, t, 0.0);
  };
  Trajectory traj = integrate(rhs, u0, t0, grid.back(), cfg.integrator, grid);

  SlowSolution out{std::move(traj), {}, {}};
  out.vbar.reserve(out.traj.size());
  out.qss_chain.reserve(out.traj.size());
  Vector chain_seed = first.v_root;
  for (std::size_t i = 0; i < out.traj.size(); ++i) {
    const Vector& u = out.traj.value(i);
    QssResult q = solve_qss(sys, u, out.traj.time(i), chain_seed, cfg.qss);
    if (max_abs(u) > cfg.bound || max_abs(q.v_root) > cfg.bound) {
      throw BoundednessViolation("integrate_reduced: slow curve left the configured bound at t = " +
                                 std::to_string(out.traj.time(i)));
    }
    chain_seed = q.v_root;
    out.vbar.push_back(q.v_root);
    out.qss_chain.push_back(std::move(q));
  }
  return out;
}

IntegratorConfig full_system_config(double eps, IntegratorConfig base) {
  base.max_step = std::min(base.max_step, 0.5 * eps);
  return base;
}

Trajectory integrate_full(const FastSlowSystem& sys, const Vector& u0, const Vector& v0, double eps,
                          std::span<const double> grid, const IntegratorConfig& cfg) {
  sys.validate();
  if (u0.size() != sys.n || v0.size() != sys.m) throw Error("integrate_full: initial state has the wrong dimension");
  if (!(eps > 0.0) || eps > sys.eps_max) throw Error("integrate_full: eps outside (0, eps_max]");
  const int n = sys.n;
  const int m = sys.m;
  Rhs rhs = [&](double t, const Vector& y) -> Vector {
    const Vector u = y.head(n);
    const Vector v = y.tail(m);
    return concat(eval_f(sys, u, v, t, eps), eval_g(sys, u, v, t, eps) / eps);
  };
  RhsJacobian jac = [&](double t, const Vector& y) -> Matrix {
    const State s{t, y.head(n), y.tail(m)};
    Matrix j(n + m, n + m);
    j.topLeftCorner(n, n) = jacobian(sys, Partial::f_u, s, eps);
    j.topRightCorner(n, m) = jacobian(sys, Partial::f_v, s, eps);
    j.bottomLeftCorner(m, n) = jacobian(sys, Partial::g_u, s, eps) / eps;
    j.bottomRightCorner(m, m) = jacobian(sys, Partial::g_v, s, eps) / eps;
    return j;
  };
  Trajectory out = integrate(rhs, concat(u0, v0), grid.front(), grid.back(), cfg, grid, jac);
  out.meta().eps = eps;
  return out;
}

Vector composite_v(const SlowSolution& slow, const LayerSolution& layer, double eps, double t) {
  return slow.vbar_at(t) + layer.correction_at(t / eps);
}

double ErrorCurves::sup_on(const std::vector<double>& t, const std::vector<double>& col, double lo, double hi) {
  double out = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] >= lo && t[i] <= hi) out = std::max(out, col[i]);
  }
  return out;
}

ErrorCurves error_curves(const Trajectory& full, const SlowSolution& slow, const LayerSolution& layer,
                         double eps, std::span<const double> grid, double rho) {
  const int n = static_cast<int>(slow.traj.value(0).size());
  ErrorCurves out;
  out.rho = rho;
  out.t_rho = eps * layer.tau_rho(rho);
  out.t.assign(grid.begin(), grid.end());
  for (double t : grid) {
    const Vector y = full.at(t);
    const Vector u = y.head(n);
    const Vector v = y.tail(y.size() - n);
    const Vector vbar = slow.vbar_at(t);
    out.err_u.push_back((u - slow.ubar_at(t)).norm());
    out.err_v.push_back((v - vbar).norm());
    out.err_composite.push_back((v - vbar - layer.correction_at(t / eps)).norm());
  }
  const double inf = std::numeric_limits<double>::infinity();
  out.sup_u_after_t_rho = ErrorCurves::sup_on(out.t, out.err_u, out.t_rho, inf);
  out.sup_v_after_t_rho = ErrorCurves::sup_on(out.t, out.err_v, out.t_rho, inf);
  out.sup_composite = ErrorCurves::sup_on(out.t, out.err_composite, -inf, inf);
  return out;
}

}  // namespace tikhonov
