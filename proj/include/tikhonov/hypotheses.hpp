#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tikhonov/core.hpp"
#include "tikhonov/dichotomy.hpp"
#include "tikhonov/layer.hpp"
#include "tikhonov/reduction.hpp"

namespace tikhonov {

struct A2Result {
  bool isolated = false;
  double min_pivot = 0.0;  // relative to ||g_v||_inf, smallest along the chain
  std::string detail;
};

struct A3Result {
  double kappa_prime = 0.0;
  /// Time of the worst margin; +infinity when the limit point is worst.
  double worst_t = 0.0;
  bool limit_point_used = false;
  /// The worst margin sits at the end of the grid and is still shrinking
  /// there, so the grid does not resolve the supremum over [0, inf).
  bool unresolved = false;
  bool pass = false;
};

struct TubeResult {
  double kappa = 0.0;
  double delta = 0.0;
  double eps0 = 0.0;
  int samples = 0;
  std::uint64_t seed = 0;
  bool pass = false;
};

struct A4Result {
  BasinResult basin;
  bool pass = false;
};

enum class A5Route { equilibrium, propagator };
const char* to_string(A5Route route);

struct A5Result {
  A5Route route = A5Route::equilibrium;
  double K1 = 0.0;
  double alpha1 = 0.0;
  bool pass = false;
  std::string detail;
};

struct HypothesisReport {
  std::string model;
  bool a1_declared_smooth = false;
  A2Result a2;
  std::optional<A3Result> a3;
  std::optional<TubeResult> tube;
  std::optional<A4Result> a4;
  std::optional<A5Result> a5_equilibrium;
  std::optional<A5Result> a5_propagator;
  std::vector<double> grid;
  bool pass = false;
  std::vector<std::string> failing;
};

/// kappa' = -max over the slow grid of s(g_v(u_bar, phi(u_bar, t), t, 0)).
/// The supremum over [0, inf) is approximated by the grid plus the declared
/// equilibrium that u_bar ends near, when there is one. Fails when the
/// margin is still shrinking at the last grid point with no limit point.
A3Result check_a3(const FastSlowSystem& sys, const SlowSolution& slow);

/// Monte-Carlo over the product balls E_delta(u_bar(t)) x E_delta(phi) and
/// eps uniform in [0, eps0]; the ball centres at eps = 0 are always included.
TubeResult check_a3_tube(const FastSlowSystem& sys, const SlowSolution& slow, double delta, double eps0,
                         int samples = 64, std::uint64_t seed = 0x5eedULL);

/// f_u + f_v phi_u at (u, phi(u, t), t, 0).
Matrix reduced_jacobian(const FastSlowSystem& sys, const Vector& u, double t, const Vector& v_seed);

/// Equilibrium route: pass iff s(J_f(u*)) < 0 at the declared equilibrium the
/// slow solution approaches. Throws NoEquilibriumDeclared when the model
/// declares none.
A5Result check_a5_equilibrium(const FastSlowSystem& sys, const SlowSolution& slow);

/// Propagator route on a given D(t) over [0, horizon]: alpha1 from the decay
/// of max_s log ||Y(s + lag, s)|| between lag_max / 2 and lag_max, K1 the
/// smallest constant covering every sampled pair at that alpha1.
A5Result check_a5_propagator(const MatrixFunction& D, double horizon);
/// Same with D(t) = J_f(u_bar(t)) along the slow solution.
A5Result check_a5_propagator(const FastSlowSystem& sys, const SlowSolution& slow);

struct ReportConfig {
  double t_end = 200.0;
  double dt = 0.1;
  double delta = 0.05;
  /// Defaults to min(eps_max, 0.05).
  std::optional<double> eps0;
  int tube_samples = 64;
  std::uint64_t seed = 0x5eedULL;
};

/// Runs A2 to A5 from (u_hat, v_hat). A1 is carried as the model's declared
/// smoothness flag. Overall pass is the conjunction of every audit run,
/// including the tube check.
HypothesisReport full_report(const FastSlowSystem& sys, const Vector& u_hat, const Vector& v_hat,
                             const ReportConfig& cfg = {});

nlohmann::json to_json(const HypothesisReport& report);

}  // namespace tikhonov
