#pragma once

#include <optional>
#include <string>

#include "tikhonov/core.hpp"
#include "tikhonov/integrate.hpp"
#include "tikhonov/reduction.hpp"

namespace tikhonov {

struct LayerConfig {
  IntegratorConfig integrator = [] {
    IntegratorConfig c;
    c.rel_tol = 1e-11;
    c.abs_tol = 1e-15;
    return c;
  }();
  /// Output spacing in fast time; the stepper lands on every sample.
  double dtau = 1e-3;
  /// Divergence when ||v_hat_0|| exceeds this.
  double divergence_bound = 1e6;
  /// Log-linear fit window on ||v_tilde_0||.
  double fit_lo = 1e-8;
  double fit_hi = 1e-1;
};

/// Exponential decay fit ||v_tilde_0(tau)|| ~ C exp(-kappa tau).
struct DecayFit {
  double C = 0.0;             // envelope: smallest C bounding the window
  double C_regression = 0.0;  // exp(intercept) of the least-squares line
  double kappa = 0.0;
  double tau_start = 0.0;
  double tau_end = 0.0;
  std::size_t samples = 0;
};

/// Solution of the frozen-argument fast system v' = g(u_hat, v, 0, 0) in
/// fast time, with its correction v_tilde_0 = v_hat_0 - phi(u_hat, 0).
class LayerSolution {
 public:
  LayerSolution(Trajectory traj, Vector u_hat, Vector phi0, std::optional<DecayFit> fit, bool converged);

  const Trajectory& traj() const { return traj_; }
  const Vector& u_hat() const { return u_hat_; }
  const Vector& phi0() const { return phi0_; }
  const std::optional<DecayFit>& fit() const { return fit_; }
  bool converged() const { return converged_; }

  Vector correction(std::size_t i) const { return traj_.value(i) - phi0_; }
  /// Correction at fast time tau; zero beyond the computed span.
  Vector correction_at(double tau) const;

  /// Smallest sample tau after which ||v_tilde_0|| stays <= rho;
  /// +infinity when the layer has not decayed that far.
  double tau_rho(double rho) const;

 private:
  Trajectory traj_;
  Vector u_hat_;
  Vector phi0_;
  std::optional<DecayFit> fit_;
  bool converged_ = false;
};

/// Integrates the initial layer equation on [0, tau_max]. `phi_seed` selects
/// the QSS root the layer is measured against (model seed by default).
/// Throws Divergence when the layer leaves the divergence bound.
LayerSolution integrate_layer(const FastSlowSystem& sys, const Vector& u_hat, const Vector& v_hat, double tau_max,
                              const LayerConfig& cfg = {}, std::optional<Vector> phi_seed = std::nullopt);

/// Least-squares log-linear fit on the samples whose norm lies in [lo, hi].
std::optional<DecayFit> fit_decay(const std::vector<double>& tau, const std::vector<double>& norms, double lo,
                                  double hi);

enum class BasinVerdict { inside, outside, inconclusive };
const char* to_string(BasinVerdict verdict);

struct BasinResult {
  BasinVerdict verdict = BasinVerdict::inconclusive;
  double final_distance = 0.0;
  double tau_end = 0.0;
  std::optional<DecayFit> fit;
  std::string detail;
};

/// A4 audit: does the layer started at v_hat reach phi(u_hat, 0)? Integrates
/// to tau = 200 / kappa_prime (kappa_prime from A3; measured at the root
/// when not supplied, 1 when it is not positive).
BasinResult basin_check(const FastSlowSystem& sys, const Vector& u_hat, const Vector& v_hat,
                        std::optional<double> kappa_prime = std::nullopt,
                        std::optional<Vector> phi_seed = std::nullopt);

}  // namespace tikhonov
