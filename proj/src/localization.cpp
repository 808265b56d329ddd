#include "tikhonov/localization.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace tikhonov {

namespace {

double h(double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; }
double dh(double x) { return x > 0.0 ? std::exp(-1.0 / x) / (x * x) : 0.0; }

// Smooth step from 0 (y <= 0) to 1 (y >= 1).
double step(double y) {
  if (y <= 0.0) return 0.0;
  if (y >= 1.0) return 1.0;
  const double a = h(y), b = h(1.0 - y);
  return a / (a + b);
}

double step_derivative(double y) {
  if (y <= 0.0 || y >= 1.0) return 0.0;
  const double a = h(y), b = h(1.0 - y);
  const double s = a + b;
  return (dh(y) * b + a * dh(1.0 - y)) / (s * s);
}

}  // namespace

BumpProfile::BumpProfile() {
  for (int i = 0; i <= 20000; ++i) {
    const double x = 0.25 + 0.75 * i / 20000.0;
    derivative_bound_ = std::max(derivative_bound_, std::abs(derivative(x)));
  }
}

double BumpProfile::operator()(double x) const { return 1.0 - step((x - 0.25) / 0.75); }

double BumpProfile::derivative(double x) const { return -step_derivative((x - 0.25) / 0.75) / 0.75; }

Tube::Tube(FastSlowSystem sys, SlowSolution slow, double delta)
    : sys_(std::move(sys)), slow_(std::move(slow)), delta_(delta) {
  if (!(delta > 0.0)) throw Error("Tube: delta must be positive");
}

Tube::Center Tube::center(double t) const {
  Center c;
  c.u = slow_.ubar_at(t);
  const QssResult q = solve_qss(sys_, c.u, t, slow_.vbar_at(t));
  c.v = q.v_root;
  c.g_u = q.g_u;
  c.g_v = q.g_v;
  return c;
}

bool Tube::contains(const Vector& u, const Vector& v, double t, double radius) const {
  const Center c = center(t);
  return (u - c.u).norm() <= radius && (v - c.v).norm() <= radius;
}

double default_delta(const SlowSolution& slow, const Vector& u0, const Vector& v0) {
  const double dist = std::hypot((u0 - slow.traj.value(0)).norm(), (v0 - slow.vbar.front()).norm());
  return std::clamp(0.5 * dist, 0.05, 1.0);
}

namespace {

BumpWeights weights_at(const Tube& tube, const Tube::Center& c, const Vector& u, const Vector& v) {
  const double d2 = tube.delta() * tube.delta();
  BumpWeights w;
  w.psi = tube.profile()((u - c.u).squaredNorm() / d2);
  w.chi = tube.profile()((v - c.v).squaredNorm() / d2);
  w.Psi = w.psi * w.chi;
  return w;
}

}  // namespace

BumpWeights bump_weights(const Tube& tube, const Vector& u, const Vector& v, double t) {
  return weights_at(tube, tube.center(t), u, v);
}

Vector localized_g(const Tube& tube, const Vector& u, const Vector& v, double t, double eps) {
  const Tube::Center c = tube.center(t);
  const BumpWeights w = weights_at(tube, c, u, v);
  const Vector lin_u = c.g_u * (u - c.u);
  const Vector lin_v = c.g_v * (v - c.v);
  const Vector remainder = eval_g(tube.system(), u, v, t, eps) - lin_u - lin_v;
  return w.psi * lin_u + lin_v + w.Psi * remainder;
}

FastSlowSystem localized_system(const Tube& tube) {
  FastSlowSystem out = tube.system();
  out.name += "-localized";
  // The tube is shared so the returned system stays valid on its own.
  auto shared = std::make_shared<const Tube>(tube);
  out.g = [shared](const Vector& u, const Vector& v, double t, double eps) {
    return localized_g(*shared, u, v, t, eps);
  };
  out.jacobians.g_u = nullptr;
  out.jacobians.g_v = nullptr;
  out.jacobians.g_t = nullptr;
  out.reduced_override = nullptr;
  return out;
}

CoincidenceResult coincidence_test(const Tube& tube, double eps, const Vector& u0, const Vector& v0,
                                   std::span<const double> grid, const IntegratorConfig& cfg) {
  const FastSlowSystem& sys = tube.system();
  const FastSlowSystem loc = localized_system(tube);
  const IntegratorConfig icfg = full_system_config(eps, cfg);
  const Trajectory a = integrate_full(sys, u0, v0, eps, grid, icfg);
  const Trajectory b = integrate_full(loc, u0, v0, eps, grid, icfg);

  CoincidenceResult out;
  const double half = 0.5 * tube.delta();
  out.init_inside = tube.contains(u0, v0, grid.front(), half);
  bool inside = out.init_inside;
  if (!inside) out.exit_time = grid.front();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a.time(i);
    const double gap = (a.value(i) - b.value(i)).lpNorm<Eigen::Infinity>();
    out.t.push_back(t);
    out.gap.push_back(gap);
    if (inside) {
      const Vector& y = b.value(i);
      if (!tube.contains(y.head(sys.n), y.tail(sys.m), t, half)) {
        inside = false;
        out.exit_time = t;
      } else {
        out.max_gap_inside = std::max(out.max_gap_inside, gap);
      }
    }
  }
  return out;
}

}  // namespace tikhonov
