#pragma once

#include <optional>
#include <span>
#include <vector>

#include "tikhonov/core.hpp"
#include "tikhonov/reduction.hpp"

namespace tikhonov {

/// Smooth cut-off on [0, inf): 1 on [0, 1/4], 0 on [1, inf), monotone in
/// between. The transition is the exp(-1/x) smooth step.
class BumpProfile {
 public:
  BumpProfile();

  double operator()(double x) const;
  double derivative(double x) const;
  /// max |psi'| measured on a fine grid of the transition interval.
  double derivative_bound() const { return derivative_bound_; }

 private:
  double derivative_bound_ = 0.0;
};

/// Moving tube of radius delta around (u_bar(t), phi(u_bar(t), t)).
class Tube {
 public:
  Tube(FastSlowSystem sys, SlowSolution slow, double delta);

  struct Center {
    Vector u;    // u_bar(t)
    Vector v;    // phi(u_bar(t), t)
    Matrix g_u;  // at (u, v, t, 0)
    Matrix g_v;
  };
  Center center(double t) const;

  /// Both ||u - u_bar(t)|| <= radius and ||v - phi|| <= radius.
  bool contains(const Vector& u, const Vector& v, double t, double radius) const;

  const FastSlowSystem& system() const { return sys_; }
  const SlowSolution& slow() const { return slow_; }
  double delta() const { return delta_; }
  const BumpProfile& profile() const { return profile_; }

 private:
  FastSlowSystem sys_;
  SlowSolution slow_;
  double delta_;
  BumpProfile profile_;
};

/// Half the distance from (u0, v0) to the start of the slow curve, clamped
/// to [0.05, 1].
double default_delta(const SlowSolution& slow, const Vector& u0, const Vector& v0);

struct BumpWeights {
  double psi = 0.0;  // psi(||u - u_bar||^2 / delta^2)
  double chi = 0.0;  // psi(||v - phi||^2 / delta^2)
  double Psi = 0.0;  // psi * chi
};

BumpWeights bump_weights(const Tube& tube, const Vector& u, const Vector& v, double t);

/// psi g_u (u - u_bar) + g_v (v - phi) + Psi R with R = g - (linear part),
/// the Jacobians frozen on the slow curve at eps = 0.
Vector localized_g(const Tube& tube, const Vector& u, const Vector& v, double t, double eps);

/// The tube's system with g replaced by the localized field; the g
/// Jacobians fall back to finite differences.
FastSlowSystem localized_system(const Tube& tube);

struct CoincidenceResult {
  bool init_inside = false;          // init in E_{delta/2}
  std::optional<double> exit_time;   // first sample outside E_{delta/2}
  double max_gap_inside = 0.0;       // sup-norm gap before exit
  std::vector<double> t;
  std::vector<double> gap;
};

/// Integrates the original and localized systems from the same state on
/// `grid` and compares them.
CoincidenceResult coincidence_test(const Tube& tube, double eps, const Vector& u0, const Vector& v0,
                                   std::span<const double> grid, const IntegratorConfig& cfg = {});

}  // namespace tikhonov
