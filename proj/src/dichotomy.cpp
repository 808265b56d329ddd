#include "tikhonov/dichotomy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tikhonov/smalldense.hpp"

namespace tikhonov {

namespace {

Vector flatten(const Matrix& a) { return Eigen::Map<const Vector>(a.data(), a.size()); }

Matrix unflatten(const Vector& y, Eigen::Index k) { return Eigen::Map<const Matrix>(y.data(), k, k); }

}  // namespace

std::vector<Matrix> propagator_samples(const MatrixFunction& D, double eps, double s, std::span<const double> times,
                                       const PropagatorConfig& cfg) {
  if (!(eps >= cfg.eps_floor)) {
    throw StepUnderflow("propagator: eps below the configured floor");
  }
  if (times.empty()) return {};
  if (times.front() < s) throw Error("propagator: sample times must not precede s");
  const Matrix d0 = D(s);
  const Eigen::Index k = d0.rows();
  if (d0.cols() != k) throw Error("propagator: D(t) must be square");

  std::vector<double> grid;
  grid.reserve(times.size() + 1);
  if (times.front() > s) grid.push_back(s);
  grid.insert(grid.end(), times.begin(), times.end());
  std::vector<Matrix> out;
  out.reserve(times.size());
  if (grid.size() == 1) {
    out.push_back(Matrix::Identity(k, k));
    return out;
  }

  Rhs rhs = [&](double t, const Vector& y) -> Vector { return flatten(D(t) * unflatten(y, k)) / eps; };
  RhsJacobian jac = [&](double t, const Vector&) -> Matrix {
    // vec(D Y) = (I kron D) vec(Y)
    const Matrix dt = D(t) / eps;
    Matrix j = Matrix::Zero(k * k, k * k);
    for (Eigen::Index c = 0; c < k; ++c) j.block(c * k, c * k, k, k) = dt;
    return j;
  };
  const Vector y0 = flatten(Matrix::Identity(k, k));
  const Trajectory traj = integrate(rhs, y0, s, grid.back(), cfg.integrator, grid, jac);
  for (std::size_t i = grid.size() - times.size(); i < traj.size(); ++i) out.push_back(unflatten(traj.value(i), k));
  return out;
}

Matrix propagator(const MatrixFunction& D, double eps, double s, double t, const PropagatorConfig& cfg) {
  if (t < s) throw Error("propagator: need s <= t");
  const double times[] = {t};
  return propagator_samples(D, eps, s, times, cfg).front();
}

DichotomyFit fit_dichotomy(const MatrixFunction& D, double eps, double horizon, const DichotomyConfig& cfg) {
  if (!(horizon > 0.0)) throw Error("fit_dichotomy: horizon must be positive");
  const double extended = 2.0 * horizon;

  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= cfg.spectrum_samples; ++i) {
    const double t = extended * i / cfg.spectrum_samples;
    const double s = dense::spectral_bound<double>(D(t));
    if (s >= 0.0) {
      throw HypothesisViolated("fit_dichotomy: spectral bound of D(t) is " + std::to_string(s) +
                               " >= 0 at t = " + std::to_string(t));
    }
    worst = std::max(worst, s);
  }

  DichotomyFit fit;
  fit.eps = eps;
  fit.horizon = horizon;
  fit.margin = -worst;
  fit.sigma = cfg.sigma ? *cfg.sigma : 0.5 * fit.margin;
  if (!(fit.sigma > 0.0)) throw Error("fit_dichotomy: sigma must be positive");
  const double spacing = cfg.spacing ? *cfg.spacing : std::max(eps, horizon / 512.0);
  const double lag_cap = cfg.lag_factor * eps / fit.sigma;
  const auto lag_steps = static_cast<std::size_t>(std::floor(lag_cap / spacing + 1e-9));
  const auto starts = static_cast<std::size_t>(std::floor(extended / spacing + 1e-9));

  // G[j] = max over s of log ||Y(s + j spacing, s)||, for the rate fit.
  std::vector<double> G(lag_steps + 1, -std::numeric_limits<double>::infinity());
  double c = 1.0, c_ext = 1.0;
  for (std::size_t i = 0; i <= starts; ++i) {
    const double s = static_cast<double>(i) * spacing;
    std::vector<double> times;
    for (std::size_t j = 1; j <= lag_steps; ++j) {
      const double t = s + static_cast<double>(j) * spacing;
      if (t > extended * (1.0 + 1e-12)) break;
      times.push_back(t);
    }
    if (s <= horizon) fit.grid.emplace_back(s, s);
    G[0] = 0.0;
    if (times.empty()) continue;
    const std::vector<Matrix> ys = propagator_samples(D, eps, s, times, cfg.propagator);
    for (std::size_t j = 0; j < ys.size(); ++j) {
      const double lag = times[j] - s;
      const double norm = dense::norm2<double>(ys[j]);
      const double weighted = norm * std::exp(fit.sigma * lag / eps);
      c_ext = std::max(c_ext, weighted);
      if (times[j] <= horizon * (1.0 + 1e-12)) {
        c = std::max(c, weighted);
        fit.grid.emplace_back(s, times[j]);
      }
      if (norm > 0.0) G[j + 1] = std::max(G[j + 1], std::log(norm));
    }
  }
  fit.c = c;
  fit.c_extended = c_ext;
  fit.residual = c_ext / c;
  fit.pass = std::isfinite(c) && std::isfinite(c_ext) && std::abs(fit.residual - 1.0) < 0.05;

  // Least-squares slope of G over lags still well above the integration
  // floor.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t count = 0;
  const double floor = std::log(1e-12);
  for (std::size_t j = 1; j < G.size(); ++j) {
    if (!(G[j] > floor)) continue;
    const double x = static_cast<double>(j) * spacing;
    sx += x;
    sy += G[j];
    sxx += x * x;
    sxy += x * G[j];
    ++count;
  }
  if (count >= 2) {
    const double nn = static_cast<double>(count);
    fit.decay_rate = -(nn * sxy - sx * sy) / (nn * sxx - sx * sx);
  } else {
    fit.decay_rate = std::numeric_limits<double>::quiet_NaN();
  }
  return fit;
}

double continuity_modulus(const MatrixFunction& D, double eps, double horizon, int t_samples, int q_samples) {
  if (!(eps > 0.0) || !(horizon > 0.0) || t_samples < 1 || q_samples < 1) {
    throw Error("continuity_modulus: invalid arguments");
  }
  const double width = std::sqrt(eps);
  double out = 0.0;
  for (int i = 0; i <= t_samples; ++i) {
    const double t = horizon * i / t_samples;
    const Matrix dt = D(t);
    const double lo = std::max(0.0, t - width);
    for (int j = 0; j < q_samples; ++j) {
      const double q = lo + (t - lo) * j / q_samples;
      out = std::max(out, dense::norm2<double>(Matrix(D(q) - dt)));
    }
  }
  return out;
}

}  // namespace tikhonov
