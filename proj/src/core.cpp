#include "tikhonov/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tikhonov {

const char* to_string(Partial which) {
  switch (which) {
    case Partial::g_v: return "g_v";
    case Partial::g_u: return "g_u";
    case Partial::f_u: return "f_u";
    case Partial::f_v: return "f_v";
    case Partial::g_t: return "g_t";
  }
  return "?";
}

void FastSlowSystem::validate() const {
  if (n < 1 || m < 1) throw Error("FastSlowSystem '" + name + "': n and m must be >= 1");
  if (!f || !g) throw Error("FastSlowSystem '" + name + "': f and g are required");
  if (!(eps_max > 0.0)) throw Error("FastSlowSystem '" + name + "': eps_max must be positive");
}

namespace {

void require_finite(const Vector& x, const char* what, const FastSlowSystem& sys) {
  if (!x.allFinite()) {
    std::ostringstream os;
    os << sys.name << ": " << what << " returned a non-finite value";
    throw NonFiniteOutput(os.str());
  }
}

void require_finite(const Matrix& x, const char* what, const FastSlowSystem& sys) {
  if (!x.allFinite()) {
    std::ostringstream os;
    os << sys.name << ": jacobian " << what << " is non-finite";
    throw NonFiniteOutput(os.str());
  }
}

const JacobianField& analytic(const FastSlowSystem& sys, Partial which) {
  switch (which) {
    case Partial::g_v: return sys.jacobians.g_v;
    case Partial::g_u: return sys.jacobians.g_u;
    case Partial::f_u: return sys.jacobians.f_u;
    case Partial::f_v: return sys.jacobians.f_v;
    case Partial::g_t: return sys.jacobians.g_t;
  }
  return sys.jacobians.g_v;
}

double fd_step(double x) { return std::max(1e-6, 1e-6 * std::abs(x)); }

}  // namespace

Vector eval_f(const FastSlowSystem& sys, const Vector& u, const Vector& v, double t, double eps) {
  Vector out = sys.f(u, v, t, eps);
  require_finite(out, "f", sys);
  return out;
}

Vector eval_g(const FastSlowSystem& sys, const Vector& u, const Vector& v, double t, double eps) {
  Vector out = sys.g(u, v, t, eps);
  require_finite(out, "g", sys);
  return out;
}

Derivative eval_rhs(const FastSlowSystem& sys, const State& s, double eps) {
  if (!(eps > 0.0) || eps > sys.eps_max) {
    throw Error("eval_rhs: eps outside (0, eps_max]");
  }
  if (!s.finite()) throw NonFiniteState("eval_rhs: non-finite state");
  return {eval_f(sys, s.u, s.v, s.t, eps), eval_g(sys, s.u, s.v, s.t, eps) / eps};
}

Derivative eval_rhs_fast(const FastSlowSystem& sys, const State& s, double eps) {
  if (!s.finite()) throw NonFiniteState("eval_rhs_fast: non-finite state");
  return {eps * eval_f(sys, s.u, s.v, s.t, eps), eval_g(sys, s.u, s.v, s.t, eps)};
}

Matrix jacobian_fd(const FastSlowSystem& sys, Partial which, const State& s, double eps) {
  const bool of_g = which == Partial::g_v || which == Partial::g_u || which == Partial::g_t;
  const Field& h = of_g ? sys.g : sys.f;
  const int rows = of_g ? sys.m : sys.n;

  if (which == Partial::g_t) {
    const double step = fd_step(s.t);
    // One-sided at the left end of the time domain.
    const double lo = s.t - step >= 0.0 ? s.t - step : s.t;
    const double hi = s.t + step;
    Matrix out = (h(s.u, s.v, hi, eps) - h(s.u, s.v, lo, eps)) / (hi - lo);
    require_finite(out, to_string(which), sys);
    return out;
  }

  const bool wrt_u = which == Partial::g_u || which == Partial::f_u;
  const Vector& x = wrt_u ? s.u : s.v;
  Matrix out(rows, x.size());
  Vector xp = x;
  Vector xm = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double step = fd_step(x[j]);
    xp[j] = x[j] + step;
    xm[j] = x[j] - step;
    const Vector hp = wrt_u ? h(xp, s.v, s.t, eps) : h(s.u, xp, s.t, eps);
    const Vector hm = wrt_u ? h(xm, s.v, s.t, eps) : h(s.u, xm, s.t, eps);
    out.col(j) = (hp - hm) / (2.0 * step);
    xp[j] = x[j];
    xm[j] = x[j];
  }
  require_finite(out, to_string(which), sys);
  return out;
}

Matrix jacobian(const FastSlowSystem& sys, Partial which, const State& s, double eps) {
  if (const auto& fn = analytic(sys, which)) {
    Matrix out = fn(s.u, s.v, s.t, eps);
    require_finite(out, to_string(which), sys);
    return out;
  }
  return jacobian_fd(sys, which, s, eps);
}

Trajectory::Trajectory(std::vector<double> times, std::vector<Vector> values, TrajectoryMeta meta)
    : times_(std::move(times)), values_(std::move(values)), meta_(std::move(meta)) {
  if (times_.size() != values_.size()) throw Error("Trajectory: times/values size mismatch");
  if (times_.size() < 2) throw Error("Trajectory: at least two samples required");
  for (std::size_t i = 1; i < times_.size(); ++i) {
    if (!(times_[i] > times_[i - 1])) throw Error("Trajectory: time stamps must be strictly increasing");
  }
}

Vector Trajectory::at(double t) const {
  if (t <= times_.front()) return values_.front();
  if (t >= times_.back()) return values_.back();
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  const std::size_t hi = static_cast<std::size_t>(it - times_.begin());
  const std::size_t lo = hi - 1;
  if (times_[lo] == t) return values_[lo];
  const double w = (t - times_[lo]) / (times_[hi] - times_[lo]);
  return (1.0 - w) * values_[lo] + w * values_[hi];
}

State Trajectory::state(std::size_t i, int n) const {
  const Vector& y = values_[i];
  return {times_[i], y.head(n), y.tail(y.size() - n)};
}

}  // namespace tikhonov
