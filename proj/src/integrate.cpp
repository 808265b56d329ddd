#include "tikhonov/integrate.hpp"

#include <algorithm>
#include <cmath>

#include "tikhonov/smalldense.hpp"

namespace tikhonov {

const char* to_string(Method method) {
  switch (method) {
    case Method::rk4_fixed: return "rk4_fixed";
    case Method::rk45_adaptive: return "rk45_adaptive";
    case Method::backward_euler: return "backward_euler";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  if (name == "rk4" || name == "rk4_fixed") return Method::rk4_fixed;
  if (name == "rk45" || name == "rk45_adaptive") return Method::rk45_adaptive;
  if (name == "be" || name == "backward_euler") return Method::backward_euler;
  throw Error("unknown integration method '" + name + "'");
}

void IntegratorConfig::validate() const {
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw Error("IntegratorConfig: tolerances must be positive");
  if (!(min_step < max_step)) throw Error("IntegratorConfig: min_step must be below max_step");
  if (method != Method::rk45_adaptive && !std::isfinite(max_step)) {
    throw Error("IntegratorConfig: fixed-step methods need a finite max_step");
  }
}

std::vector<double> uniform_grid(double t0, double t1, double dt) {
  if (!(t1 > t0) || !(dt > 0.0)) throw Error("uniform_grid: need t1 > t0 and dt > 0");
  const auto count = static_cast<long>(std::ceil((t1 - t0) / dt - 1e-9));
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(count) + 1);
  for (long k = 0; k < count; ++k) grid.push_back(t0 + static_cast<double>(k) * dt);
  grid.push_back(t1);
  return grid;
}

namespace {

void check_state(const Vector& y, double t) {
  if (!y.allFinite()) {
    throw NonFiniteState("integrate: state became non-finite at t = " + std::to_string(t));
  }
}

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

class Stepper {
 public:
  Stepper(const Rhs& rhs, const IntegratorConfig& cfg, const RhsJacobian& jac)
      : rhs_(rhs), cfg_(cfg), jac_(jac) {}

  long steps() const { return steps_; }

  // Advances (t, y) to exactly t_target.
  void advance(double& t, Vector& y, double t_target) {
    switch (cfg_.method) {
      case Method::rk4_fixed: return advance_rk4(t, y, t_target);
      case Method::rk45_adaptive: return advance_rk45(t, y, t_target);
      case Method::backward_euler: return advance_be(t, y, t_target);
    }
  }

 private:
  void count_step(double t) {
    if (++steps_ > cfg_.max_steps) {
      throw MaxStepsExceeded("integrate: exceeded max_steps at t = " + std::to_string(t));
    }
  }

  void advance_rk4(double& t, Vector& y, double t_target) {
    const double span = t_target - t;
    const auto n = std::max<long>(1, static_cast<long>(std::ceil(span / cfg_.max_step - 1e-12)));
    const double h = span / static_cast<double>(n);
    const double t_start = t;
    for (long k = 0; k < n; ++k) {
      const double tk = t_start + static_cast<double>(k) * h;
      const Vector k1 = rhs_(tk, y);
      const Vector k2 = rhs_(tk + 0.5 * h, y + 0.5 * h * k1);
      const Vector k3 = rhs_(tk + 0.5 * h, y + 0.5 * h * k2);
      const Vector k4 = rhs_(tk + h, y + h * k3);
      y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      count_step(tk);
      check_state(y, tk + h);
    }
    t = t_target;
  }

  double error_norm(const Vector& err, const Vector& y0, const Vector& y1) const {
    double acc = 0.0;
    const double big = cfg_.normwise_error && err.size() > 0
                           ? std::max(y0.cwiseAbs().maxCoeff(), y1.cwiseAbs().maxCoeff())
                           : 0.0;
    for (Eigen::Index i = 0; i < err.size(); ++i) {
      const double size = cfg_.normwise_error ? big : std::max(std::abs(y0[i]), std::abs(y1[i]));
      const double sc = cfg_.abs_tol + cfg_.rel_tol * size;
      acc += (err[i] / sc) * (err[i] / sc);
    }
    return err.size() == 0 ? 0.0 : std::sqrt(acc / static_cast<double>(err.size()));
  }

  double initial_step(double t, const Vector& y, const Vector& f0, double span) const {
    if (cfg_.initial_step > 0.0) return std::min({cfg_.initial_step, cfg_.max_step, span});
    Vector sc = (cfg_.abs_tol + cfg_.rel_tol * y.array().abs()).matrix();
    if (cfg_.normwise_error && y.size() > 0) sc.setConstant(cfg_.abs_tol + cfg_.rel_tol * y.cwiseAbs().maxCoeff());
    const double d0 = std::sqrt((y.array() / sc.array()).square().mean());
    const double d1 = std::sqrt((f0.array() / sc.array()).square().mean());
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min({h0, cfg_.max_step, span});
    const Vector f1 = rhs_(t + h0, y + h0 * f0);
    const double d2 = std::sqrt(((f1 - f0).array() / sc.array()).square().mean()) / h0;
    const double dmax = std::max(d1, d2);
    const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 1.0 / 5.0);
    return std::min({100.0 * h0, h1, cfg_.max_step, span});
  }

  void advance_rk45(double& t, Vector& y, double t_target) {
    if (fsal_.size() != y.size()) fsal_ = rhs_(t, y);
    if (h_ <= 0.0) h_ = initial_step(t, y, fsal_, t_target - t);

    while (t < t_target) {
      const double remaining = t_target - t;
      bool clipped = false;
      double h = std::min(h_, cfg_.max_step);
      if (h >= remaining) {
        h = remaining;
        clipped = true;
      } else if (h > 0.5 * remaining && remaining <= cfg_.max_step) {
        // Avoid leaving a sliver before the grid point.
        h = 0.5 * remaining;
      }

      const Vector& k1 = fsal_;
      const Vector k2 = rhs_(t + c2 * h, y + h * (a21 * k1));
      const Vector k3 = rhs_(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
      const Vector k4 = rhs_(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
      const Vector k5 = rhs_(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
      const Vector k6 = rhs_(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
      const Vector y1 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      const Vector k7 = rhs_(t + h, y1);
      const Vector err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

      const double en = y1.allFinite() ? error_norm(err, y, y1) : std::numeric_limits<double>::infinity();
      if (en <= 1.0) {
        t = clipped ? t_target : t + h;
        y = y1;
        fsal_ = k7;
        count_step(t);
        check_state(y, t);
        const double factor = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
        // A step shortened only to land on the grid says nothing about h_.
        if (!clipped || h >= h_) h_ = h * factor;
      } else {
        const double factor = std::isfinite(en) ? std::clamp(0.9 * std::pow(en, -0.2), 0.1, 0.9) : 0.1;
        h_ = h * factor;
        if (h_ < cfg_.min_step) {
          throw StepUnderflow("integrate: step size underflow at t = " + std::to_string(t));
        }
      }
    }
  }

  Matrix rhs_jacobian(double t, const Vector& y) const {
    if (jac_) return jac_(t, y);
    Matrix j(y.size(), y.size());
    Vector yp = y;
    Vector ym = y;
    for (Eigen::Index c = 0; c < y.size(); ++c) {
      const double step = std::max(1e-7, 1e-7 * std::abs(y[c]));
      yp[c] += step;
      ym[c] -= step;
      j.col(c) = (rhs_(t, yp) - rhs_(t, ym)) / (2.0 * step);
      yp[c] = y[c];
      ym[c] = y[c];
    }
    return j;
  }

  // One implicit Euler step of size h; false if the Newton solve fails.
  bool be_step(double t, const Vector& y, double h, Vector& y_next) const {
    const Eigen::Index n = y.size();
    // Start from y and take at least one Newton step: an explicit predictor
    // can pass the residual test while already off the implicit solution.
    Vector x = y;
    auto residual = [&](const Vector& z) -> Vector { return z - y - h * rhs_(t + h, z); };
    Vector r = residual(x);
    const double scale = cfg_.abs_tol + cfg_.rel_tol * y.cwiseAbs().maxCoeff();
    for (int iter = 0; iter < 25; ++iter) {
      if (iter > 0 && r.allFinite() && r.cwiseAbs().maxCoeff() <= 1e-2 * scale) {
        y_next = x;
        return true;
      }
      const Matrix m = Matrix::Identity(n, n) - h * rhs_jacobian(t + h, x);
      dense::Lu<double> lu(m);
      if (lu.singular()) return false;
      const Vector dx = lu.solve(-r);
      // Damped update: halve until the residual decreases.
      double lambda = 1.0;
      const double r0 = r.norm();
      bool accepted = false;
      for (int ls = 0; ls < 30; ++ls) {
        const Vector trial = x + lambda * dx;
        const Vector rt = residual(trial);
        if (rt.allFinite() && rt.norm() < r0) {
          x = trial;
          r = rt;
          accepted = true;
          break;
        }
        lambda *= 0.5;
      }
      if (!accepted) {
        if (r.allFinite() && r.cwiseAbs().maxCoeff() <= scale) {
          y_next = x;
          return true;
        }
        return false;
      }
    }
    if (r.allFinite() && r.cwiseAbs().maxCoeff() <= scale) {
      y_next = x;
      return true;
    }
    return false;
  }

  void advance_be(double& t, Vector& y, double t_target) {
    if (h_ <= 0.0) h_ = cfg_.max_step;
    Vector y_next;
    while (t < t_target) {
      const double remaining = t_target - t;
      const bool clipped = h_ >= remaining;
      const double h = clipped ? remaining : h_;
      if (be_step(t, y, h, y_next)) {
        t = clipped ? t_target : t + h;
        y = y_next;
        count_step(t);
        check_state(y, t);
        h_ = std::min(cfg_.max_step, 2.0 * h_);
      } else {
        h_ = 0.5 * h;
        if (h_ < cfg_.min_step) {
          throw StepUnderflow("integrate: backward Euler Newton failure below min_step at t = " +
                              std::to_string(t));
        }
      }
    }
  }

  const Rhs& rhs_;
  const IntegratorConfig& cfg_;
  const RhsJacobian& jac_;
  Vector fsal_;
  double h_ = 0.0;
  long steps_ = 0;
};

}  // namespace

Trajectory integrate(const Rhs& rhs, const Vector& y0, double t0, double t1, const IntegratorConfig& cfg,
                     std::span<const double> output_grid, const RhsJacobian& jac) {
  cfg.validate();
  if (!(t1 > t0)) throw Error("integrate: need t1 > t0");
  check_state(y0, t0);
  for (std::size_t i = 0; i < output_grid.size(); ++i) {
    if (output_grid[i] < t0 || output_grid[i] > t1) throw Error("integrate: output grid outside t_span");
    if (i > 0 && !(output_grid[i] > output_grid[i - 1])) {
      throw Error("integrate: output grid must be strictly increasing");
    }
  }

  Stepper stepper(rhs, cfg, jac);
  std::vector<double> times;
  std::vector<Vector> values;
  double t = t0;
  Vector y = y0;

  if (output_grid.empty()) {
    // Record every accepted step: advance to t1 in max_step-sized chunks
    // for the fixed methods, and one accepted step at a time for rk45.
    times.push_back(t);
    values.push_back(y);
    while (t < t1) {
      const double target =
          std::isfinite(cfg.max_step) ? std::min(t1, t + cfg.max_step) : t1;
      stepper.advance(t, y, target);
      times.push_back(t);
      values.push_back(y);
    }
  } else {
    for (double target : output_grid) {
      if (target > t) stepper.advance(t, y, target);
      times.push_back(target);
      values.push_back(y);
    }
  }

  TrajectoryMeta meta;
  meta.integrator = to_string(cfg.method);
  meta.rel_tol = cfg.rel_tol;
  meta.abs_tol = cfg.abs_tol;
  meta.steps = stepper.steps();
  return Trajectory(std::move(times), std::move(values), std::move(meta));
}

}  // namespace tikhonov
