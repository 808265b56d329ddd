#include "tikhonov/hypotheses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "tikhonov/smalldense.hpp"
#include "tikhonov/version.hpp"

namespace tikhonov {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Declared equilibrium within 1e-3 (relative) of the end of the slow
// solution, if any.
std::optional<Vector> limit_equilibrium(const FastSlowSystem& sys, const SlowSolution& slow) {
  const Vector& end = slow.traj.value(slow.traj.size() - 1);
  std::optional<Vector> best;
  double best_dist = kInf;
  for (const Vector& eq : sys.slow_equilibria) {
    const double dist = (end - eq).norm();
    if (dist <= 1e-3 * (1.0 + eq.norm()) && dist < best_dist) {
      best = eq;
      best_dist = dist;
    }
  }
  return best;
}

// Uniform point in the Euclidean ball of radius r around c.
Vector sample_ball(std::mt19937_64& rng, const Vector& c, double r) {
  if (r == 0.0 || c.size() == 0) return c;
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit;
  Vector dir(c.size());
  for (Eigen::Index i = 0; i < dir.size(); ++i) dir(i) = normal(rng);
  const double len = dir.norm();
  if (len == 0.0) return c;
  const double radius = r * std::pow(unit(rng), 1.0 / static_cast<double>(c.size()));
  return c + dir * (radius / len);
}

Matrix interpolate(const std::vector<double>& ts, const std::vector<Matrix>& ms, double t) {
  if (t <= ts.front()) return ms.front();
  if (t >= ts.back()) return ms.back();
  const auto hi = static_cast<std::size_t>(std::upper_bound(ts.begin(), ts.end(), t) - ts.begin());
  const std::size_t lo = hi - 1;
  const double w = (t - ts[lo]) / (ts[hi] - ts[lo]);
  return (1.0 - w) * ms[lo] + w * ms[hi];
}

Matrix reduced_jacobian_at(const FastSlowSystem& sys, const Vector& u, double t, const QssResult& q) {
  const State s{t, u, q.v_root};
  return jacobian(sys, Partial::f_u, s, 0.0) + jacobian(sys, Partial::f_v, s, 0.0) * q.phi_u;
}

}  // namespace

const char* to_string(A5Route route) {
  return route == A5Route::equilibrium ? "equilibrium" : "propagator";
}

A3Result check_a3(const FastSlowSystem& sys, const SlowSolution& slow) {
  A3Result out;
  double worst = -kInf;
  for (std::size_t i = 0; i < slow.qss_chain.size(); ++i) {
    const double s = dense::spectral_bound<double>(slow.qss_chain[i].g_v);
    if (s > worst) {
      worst = s;
      out.worst_t = slow.traj.time(i);
    }
  }
  if (const auto eq = limit_equilibrium(sys, slow)) {
    const QssResult q = solve_qss(sys, *eq, slow.t_last(), slow.vbar.back());
    const double s = dense::spectral_bound<double>(q.g_v);
    out.limit_point_used = true;
    if (s > worst) {
      worst = s;
      out.worst_t = kInf;
    }
  }
  const std::size_t last = slow.qss_chain.size() - 1;
  if (!out.limit_point_used && last > 0 && out.worst_t == slow.traj.time(last)) {
    const double before = dense::spectral_bound<double>(slow.qss_chain[last - 1].g_v);
    out.unresolved = worst > before;
  }
  out.kappa_prime = -worst;
  out.pass = out.kappa_prime > 0.0 && !out.unresolved;
  return out;
}

TubeResult check_a3_tube(const FastSlowSystem& sys, const SlowSolution& slow, double delta, double eps0,
                         int samples, std::uint64_t seed) {
  if (!(delta >= 0.0) || !(eps0 >= 0.0) || samples < 1) throw Error("check_a3_tube: invalid arguments");
  TubeResult out;
  out.delta = delta;
  out.eps0 = eps0;
  out.samples = samples;
  out.seed = seed;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> eps_dist(0.0, eps0);
  double worst = -kInf;
  for (std::size_t i = 0; i < slow.traj.size(); ++i) {
    const double t = slow.traj.time(i);
    const Vector& uc = slow.traj.value(i);
    const Vector& vc = slow.vbar[i];
    worst = std::max(worst, dense::spectral_bound<double>(jacobian(sys, Partial::g_v, State{t, uc, vc}, 0.0)));
    for (int k = 0; k < samples; ++k) {
      const State s{t, sample_ball(rng, uc, delta), sample_ball(rng, vc, delta)};
      const double eps = eps0 > 0.0 ? eps_dist(rng) : 0.0;
      worst = std::max(worst, dense::spectral_bound<double>(jacobian(sys, Partial::g_v, s, eps)));
    }
  }
  out.kappa = -worst;
  out.pass = out.kappa > 0.0;
  return out;
}

Matrix reduced_jacobian(const FastSlowSystem& sys, const Vector& u, double t, const Vector& v_seed) {
  return reduced_jacobian_at(sys, u, t, solve_qss(sys, u, t, v_seed));
}

A5Result check_a5_equilibrium(const FastSlowSystem& sys, const SlowSolution& slow) {
  if (sys.slow_equilibria.empty()) {
    throw NoEquilibriumDeclared("check_a5: model '" + sys.name + "' declares no reduced equilibrium");
  }
  A5Result out;
  out.route = A5Route::equilibrium;
  const auto eq = limit_equilibrium(sys, slow);
  if (!eq) {
    out.K1 = std::numeric_limits<double>::quiet_NaN();
    out.alpha1 = std::numeric_limits<double>::quiet_NaN();
    out.detail = "slow solution does not approach a declared equilibrium by t = " + std::to_string(slow.t_last());
    return out;
  }
  const Matrix J = reduced_jacobian(sys, *eq, slow.t_last(), slow.vbar.back());
  const double s = dense::spectral_bound<double>(J);
  out.alpha1 = -0.5 * s;
  out.pass = s < 0.0;
  if (!out.pass) {
    out.K1 = std::numeric_limits<double>::quiet_NaN();
    out.detail = "spectral bound of the reduced Jacobian at the limit equilibrium is " + std::to_string(s);
    return out;
  }
  // ||exp(J tau)|| exp(alpha1 tau) decays like exp(s tau / 2); 40 / |s|
  // covers the transient.
  const double tau_max = 40.0 / (-s);
  out.K1 = 1.0;
  for (int i = 1; i <= 400; ++i) {
    const double tau = tau_max * i / 400.0;
    const Matrix e = dense::expm<double>(Matrix(J * tau));
    out.K1 = std::max(out.K1, dense::norm2<double>(e) * std::exp(out.alpha1 * tau));
  }
  out.detail = "spectral bound " + std::to_string(s) + " at the limit equilibrium";
  return out;
}

A5Result check_a5_propagator(const MatrixFunction& D, double horizon) {
  if (!(horizon > 0.0)) throw Error("check_a5: horizon must be positive");
  constexpr int kStarts = 32;
  constexpr int kLags = 256;
  const double lag_max = std::min(0.5 * horizon, 20.0);
  const double span = horizon - lag_max;

  PropagatorConfig cfg;
  cfg.eps_floor = 0.0;
  std::vector<double> lags(kLags);
  for (int j = 0; j < kLags; ++j) lags[j] = lag_max * (j + 1) / kLags;

  // logs[i][j] = log ||Y(s_i + lag_j, s_i)||
  std::vector<std::vector<double>> logs(kStarts + 1, std::vector<double>(kLags));
  for (int i = 0; i <= kStarts; ++i) {
    const double s = span * i / kStarts;
    std::vector<double> times(kLags);
    for (int j = 0; j < kLags; ++j) times[j] = s + lags[j];
    const std::vector<Matrix> ys = propagator_samples(D, 1.0, s, times, cfg);
    for (int j = 0; j < kLags; ++j) logs[i][j] = std::log(dense::norm2<double>(ys[j]));
  }
  auto G = [&](int j) {
    double g = -kInf;
    for (const auto& row : logs) g = std::max(g, row[j]);
    return g;
  };

  A5Result out;
  out.route = A5Route::propagator;
  const int half = kLags / 2 - 1;
  out.alpha1 = -(G(kLags - 1) - G(half)) / (lags[kLags - 1] - lags[half]);
  double k_full = 1.0, k_half = 1.0;
  for (const auto& row : logs) {
    for (int j = 0; j < kLags; ++j) {
      const double k = std::exp(row[j] + out.alpha1 * lags[j]);
      k_full = std::max(k_full, k);
      if (j <= half) k_half = std::max(k_half, k);
    }
  }
  out.K1 = k_full;
  out.pass = out.alpha1 > 0.0 && std::isfinite(k_full) && k_full <= 1.05 * k_half;
  if (!(out.alpha1 > 0.0)) {
    out.detail = "propagator norms do not decay (alpha1 = " + std::to_string(out.alpha1) + ")";
  } else if (!out.pass) {
    out.detail = "K1 keeps growing with the lag; no uniform constant at this alpha1";
  } else {
    out.detail = "uniform bound over " + std::to_string((kStarts + 1) * kLags) + " pairs";
  }
  return out;
}

A5Result check_a5_propagator(const FastSlowSystem& sys, const SlowSolution& slow) {
  std::vector<double> ts = slow.traj.times();
  std::vector<Matrix> js;
  js.reserve(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    js.push_back(reduced_jacobian_at(sys, slow.traj.value(i), ts[i], slow.qss_chain[i]));
  }
  const double t0 = ts.front();
  for (double& t : ts) t -= t0;
  const MatrixFunction D = [&](double t) { return interpolate(ts, js, t); };
  return check_a5_propagator(D, ts.back());
}

HypothesisReport full_report(const FastSlowSystem& sys, const Vector& u_hat, const Vector& v_hat,
                             const ReportConfig& cfg) {
  HypothesisReport r;
  r.model = sys.name;
  r.a1_declared_smooth = sys.declared_smooth;
  r.grid = uniform_grid(0.0, cfg.t_end, cfg.dt);

  ReducedConfig rc;
  rc.v_seed = default_qss_seed(sys, u_hat, 0.0);
  std::optional<SlowSolution> slow;
  try {
    slow = integrate_reduced(sys, u_hat, r.grid, rc);
  } catch (const SingularJacobian& e) {
    r.a2.detail = e.what();
  } catch (const NoConvergence& e) {
    r.a2.detail = e.what();
  }
  if (!slow) {
    r.a2.isolated = false;
    r.failing.push_back("A2");
    return r;
  }
  r.a2.min_pivot = slow->min_pivot();
  r.a2.isolated = r.a2.min_pivot > dense::kPivotThreshold;
  r.a2.detail = "Newton QSS solved at every grid point";

  r.a3 = check_a3(sys, *slow);
  const double eps0 = cfg.eps0 ? *cfg.eps0 : std::min(sys.eps_max, 0.05);
  r.tube = check_a3_tube(sys, *slow, cfg.delta, eps0, cfg.tube_samples, cfg.seed);

  A4Result a4;
  a4.basin = basin_check(sys, u_hat, v_hat, r.a3->kappa_prime, slow->vbar.front());
  a4.pass = a4.basin.verdict == BasinVerdict::inside;
  r.a4 = a4;

  if (!sys.slow_equilibria.empty()) r.a5_equilibrium = check_a5_equilibrium(sys, *slow);
  r.a5_propagator = check_a5_propagator(sys, *slow);

  if (!r.a2.isolated) r.failing.push_back("A2");
  if (!r.a3->pass) r.failing.push_back("A3");
  if (!r.tube->pass) r.failing.push_back("A3-tube");
  if (!r.a4->pass) r.failing.push_back("A4");
  if (r.a5_equilibrium && !r.a5_equilibrium->pass) r.failing.push_back("A5-equilibrium");
  if (!r.a5_propagator->pass) r.failing.push_back("A5-propagator");
  r.pass = r.failing.empty();
  return r;
}

namespace {

nlohmann::json number(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return nullptr;
  return x > 0 ? "inf" : "-inf";
}

nlohmann::json a5_json(const A5Result& a) {
  return {{"route", to_string(a.route)}, {"K1", number(a.K1)}, {"alpha1", number(a.alpha1)},
          {"pass", a.pass}, {"detail", a.detail}};
}

}  // namespace

nlohmann::json to_json(const HypothesisReport& r) {
  nlohmann::json j;
  j["tool"] = {{"name", "tikhonov"}, {"version", kVersion}};
  j["model"] = r.model;
  j["verdict"] = r.pass ? "PASS" : "FAIL";
  j["failing"] = r.failing;
  j["a1"] = {{"declared_smooth", r.a1_declared_smooth}, {"note", "declared by model author"}};
  j["a2"] = {{"isolated", r.a2.isolated}, {"min_pivot", number(r.a2.min_pivot)}, {"detail", r.a2.detail}};
  if (r.a3) {
    j["a3"] = {{"kappa_prime", number(r.a3->kappa_prime)},
               {"worst_t", number(r.a3->worst_t)},
               {"limit_point_used", r.a3->limit_point_used},
               {"unresolved", r.a3->unresolved},
               {"sup_method", "grid plus declared limit equilibrium"},
               {"pass", r.a3->pass}};
  }
  if (r.tube) {
    j["a3_tube"] = {{"kappa", number(r.tube->kappa)}, {"delta", r.tube->delta}, {"eps0", r.tube->eps0},
                    {"samples_per_t", r.tube->samples}, {"seed", r.tube->seed}, {"pass", r.tube->pass}};
  }
  if (r.a4) {
    nlohmann::json a4 = {{"verdict", to_string(r.a4->basin.verdict)},
                         {"final_distance", number(r.a4->basin.final_distance)},
                         {"tau_end", number(r.a4->basin.tau_end)},
                         {"detail", r.a4->basin.detail},
                         {"pass", r.a4->pass}};
    if (r.a4->basin.fit) {
      a4["C"] = number(r.a4->basin.fit->C);
      a4["kappa_est"] = number(r.a4->basin.fit->kappa);
    }
    j["a4"] = a4;
  }
  j["a5"] = nlohmann::json::array();
  if (r.a5_equilibrium) j["a5"].push_back(a5_json(*r.a5_equilibrium));
  if (r.a5_propagator) j["a5"].push_back(a5_json(*r.a5_propagator));
  if (!r.grid.empty()) {
    j["grid"] = {{"t0", r.grid.front()}, {"t1", r.grid.back()}, {"points", r.grid.size()},
                 {"dt", r.grid.size() > 1 ? r.grid[1] - r.grid[0] : 0.0}};
  }
  return j;
}

}  // namespace tikhonov
