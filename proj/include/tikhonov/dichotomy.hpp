#pragma once

#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "tikhonov/core.hpp"
#include "tikhonov/integrate.hpp"

namespace tikhonov {

/// Time-dependent square matrix t -> D(t).
using MatrixFunction = std::function<Matrix(double t)>;

struct PropagatorConfig {
  IntegratorConfig integrator = [] {
    IntegratorConfig c;
    c.rel_tol = 1e-10;
    // Propagators are followed many decades below 1; an absolute floor
    // near 1e-14 would swamp the exponential weights used in the fits.
    c.abs_tol = 1e-30;
    c.normwise_error = true;
    return c;
  }();
  /// eps below this is refused with StepUnderflow.
  double eps_floor = 1e-6;
};

/// Y(t, s) for eps Y' = D(t) Y with Y(s, s) = I. Requires s <= t.
Matrix propagator(const MatrixFunction& D, double eps, double s, double t, const PropagatorConfig& cfg = {});

/// Y(t_k, s) for every t_k in `times` (ascending, all >= s).
std::vector<Matrix> propagator_samples(const MatrixFunction& D, double eps, double s, std::span<const double> times,
                                       const PropagatorConfig& cfg = {});

struct DichotomyConfig {
  /// Defaults to half the worst sampled margin -max s(D(t)).
  std::optional<double> sigma;
  /// Defaults to max(eps, horizon / 512).
  std::optional<double> spacing;
  /// Pairs are restricted to t - s <= lag_factor * eps / sigma.
  double lag_factor = 40.0;
  /// Samples of D(t) used for the hypothesis gate on [0, 2 horizon].
  int spectrum_samples = 512;
  PropagatorConfig propagator;
};

/// Fitted constants of ||Y(t, s)|| <= c exp(-sigma (t - s) / eps).
struct DichotomyFit {
  double c = 0.0;           // fitted on [0, horizon]
  double c_extended = 0.0;  // fitted on [0, 2 horizon]
  double sigma = 0.0;
  double eps = 0.0;
  double horizon = 0.0;
  double margin = 0.0;      // -max sampled s(D(t))
  std::vector<std::pair<double, double>> grid;  // (s, t) pairs on [0, horizon]
  /// Worst ||Y|| / (c exp(-sigma (t - s) / eps)) over the extended grid,
  /// i.e. c_extended / c.
  double residual = 0.0;
  /// -slope of log max_s ||Y(s + lag, s)|| against lag.
  double decay_rate = 0.0;
  /// c finite and residual within 5% of 1.
  bool pass = false;
};

/// Throws HypothesisViolated if some sampled spectral bound is >= 0.
DichotomyFit fit_dichotomy(const MatrixFunction& D, double eps, double horizon, const DichotomyConfig& cfg = {});

/// max over sampled t of max over q in [t - sqrt(eps), t] of ||D(q) - D(t)||_2.
double continuity_modulus(const MatrixFunction& D, double eps, double horizon, int t_samples = 512,
                          int q_samples = 32);

}  // namespace tikhonov
