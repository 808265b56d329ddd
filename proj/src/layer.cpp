#include "tikhonov/layer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tikhonov/smalldense.hpp"

namespace tikhonov {

LayerSolution::LayerSolution(Trajectory traj, Vector u_hat, Vector phi0, std::optional<DecayFit> fit, bool converged)
    : traj_(std::move(traj)), u_hat_(std::move(u_hat)), phi0_(std::move(phi0)), fit_(fit), converged_(converged) {}

Vector LayerSolution::correction_at(double tau) const {
  if (tau > traj_.t_last()) return Vector::Zero(phi0_.size());
  return traj_.at(tau) - phi0_;
}

double LayerSolution::tau_rho(double rho) const {
  std::size_t k = traj_.size();
  while (k > 0 && correction(k - 1).norm() <= rho) --k;
  if (k == traj_.size()) return std::numeric_limits<double>::infinity();
  return traj_.time(k);
}

std::optional<DecayFit> fit_decay(const std::vector<double>& tau, const std::vector<double>& norms, double lo,
                                  double hi) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t count = 0;
  double first = 0, last = 0;
  for (std::size_t i = 0; i < tau.size(); ++i) {
    if (!(norms[i] >= lo && norms[i] <= hi)) continue;
    const double y = std::log(norms[i]);
    if (count == 0) first = tau[i];
    last = tau[i];
    sx += tau[i];
    sy += y;
    sxx += tau[i] * tau[i];
    sxy += tau[i] * y;
    ++count;
  }
  if (count < 3) return std::nullopt;
  const double nn = static_cast<double>(count);
  const double denom = nn * sxx - sx * sx;
  if (!(denom > 0)) return std::nullopt;
  const double slope = (nn * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / nn;

  DecayFit fit;
  fit.kappa = -slope;
  fit.C_regression = std::exp(intercept);
  fit.tau_start = first;
  fit.tau_end = last;
  fit.samples = count;
  double envelope = 0.0;
  for (std::size_t i = 0; i < tau.size(); ++i) {
    if (tau[i] < first || tau[i] > last) continue;
    envelope = std::max(envelope, norms[i] * std::exp(fit.kappa * tau[i]));
  }
  fit.C = envelope;
  return fit;
}

LayerSolution integrate_layer(const FastSlowSystem& sys, const Vector& u_hat, const Vector& v_hat, double tau_max,
                              const LayerConfig& cfg, std::optional<Vector> phi_seed) {
  sys.validate();
  if (!(tau_max > 0.0)) throw Error("integrate_layer: tau_max must be positive");
  const Vector seed = phi_seed ? *phi_seed : default_qss_seed(sys, u_hat, 0.0);
  const Vector phi0 = solve_qss(sys, u_hat, 0.0, seed).v_root;

  Rhs rhs = [&](double, const Vector& v) -> Vector {
    if (!(v.norm() <= cfg.divergence_bound)) {
      throw Divergence("integrate_layer: fast variable left the basin (||v|| > bound)");
    }
    return eval_g(sys, u_hat, v, 0.0, 0.0);
  };
  const std::vector<double> grid = uniform_grid(0.0, tau_max, cfg.dtau);
  Trajectory traj = integrate(rhs, v_hat, 0.0, tau_max, cfg.integrator, grid);
  traj.meta().eps = 0.0;

  std::vector<double> norms;
  norms.reserve(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) norms.push_back((traj.value(i) - phi0).norm());
  const bool converged = norms.back() <= 1e-8 * (1.0 + v_hat.norm());
  auto fit = fit_decay(traj.times(), norms, cfg.fit_lo, cfg.fit_hi);
  return LayerSolution(std::move(traj), u_hat, phi0, fit, converged);
}

const char* to_string(BasinVerdict verdict) {
  switch (verdict) {
    case BasinVerdict::inside: return "inside";
    case BasinVerdict::outside: return "outside";
    case BasinVerdict::inconclusive: return "inconclusive";
  }
  return "?";
}

BasinResult basin_check(const FastSlowSystem& sys, const Vector& u_hat, const Vector& v_hat,
                        std::optional<double> kappa_prime, std::optional<Vector> phi_seed) {
  const Vector seed = phi_seed ? *phi_seed : default_qss_seed(sys, u_hat, 0.0);
  const QssResult root = solve_qss(sys, u_hat, 0.0, seed);
  double kappa = kappa_prime ? *kappa_prime : -dense::spectral_bound<double>(root.g_v);
  if (!(kappa > 0.0) || !std::isfinite(kappa)) kappa = 1.0;

  BasinResult out;
  out.tau_end = 200.0 / kappa;
  LayerConfig cfg;
  cfg.dtau = std::max(1e-3, out.tau_end / 4000.0);
  try {
    const LayerSolution layer = integrate_layer(sys, u_hat, v_hat, out.tau_end, cfg, root.v_root);
    const Vector v_final = layer.traj().value(layer.traj().size() - 1);
    out.final_distance = (v_final - root.v_root).norm();
    out.fit = layer.fit();
    if (out.final_distance <= 1e-6) {
      out.verdict = BasinVerdict::inside;
      out.detail = "layer converges to phi(u_hat, 0)";
    } else if (eval_g(sys, u_hat, v_final, 0.0, 0.0).norm() <= 1e-8) {
      out.verdict = BasinVerdict::outside;
      out.detail = "layer converges to a different root of g";
    } else {
      out.verdict = BasinVerdict::inconclusive;
      out.detail = "layer has not settled by tau = 200 / kappa'";
    }
  } catch (const Divergence& e) {
    out.verdict = BasinVerdict::outside;
    out.final_distance = std::numeric_limits<double>::infinity();
    out.detail = e.what();
  } catch (const NonFiniteState& e) {
    out.verdict = BasinVerdict::outside;
    out.final_distance = std::numeric_limits<double>::infinity();
    out.detail = e.what();
  }
  return out;
}

}  // namespace tikhonov
