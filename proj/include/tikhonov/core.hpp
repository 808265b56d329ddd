#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tikhonov {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Errors. Every failure mode that callers may want to branch on has its own
// type; all derive from tikhonov::Error.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define TIKHONOV_DEFINE_ERROR(Name)        \
  class Name : public Error {              \
   public:                                 \
    using Error::Error;                    \
  }

TIKHONOV_DEFINE_ERROR(NonFiniteOutput);
TIKHONOV_DEFINE_ERROR(SingularMatrix);
TIKHONOV_DEFINE_ERROR(NoConvergence);
TIKHONOV_DEFINE_ERROR(StepUnderflow);
TIKHONOV_DEFINE_ERROR(MaxStepsExceeded);
TIKHONOV_DEFINE_ERROR(NonFiniteState);
TIKHONOV_DEFINE_ERROR(Divergence);
TIKHONOV_DEFINE_ERROR(BoundednessViolation);
TIKHONOV_DEFINE_ERROR(HypothesisViolated);
TIKHONOV_DEFINE_ERROR(NoEquilibriumDeclared);

// Raised by the QSS Newton solve when g_v is singular at (or on the way to)
// the root, i.e. the root is not isolated.
class SingularJacobian : public SingularMatrix {
 public:
  using SingularMatrix::SingularMatrix;
};

#undef TIKHONOV_DEFINE_ERROR

// ---------------------------------------------------------------------------
// Fast-slow system  u' = f(u, v, t, eps),  eps v' = g(u, v, t, eps).
// ---------------------------------------------------------------------------

/// Vector field taking (u, v, t, eps).
using Field = std::function<Vector(const Vector& u, const Vector& v, double t, double eps)>;
/// Matrix-valued partial derivative taking (u, v, t, eps).
using JacobianField = std::function<Matrix(const Vector& u, const Vector& v, double t, double eps)>;

enum class Partial { g_v, g_u, f_u, f_v, g_t };

const char* to_string(Partial which);

struct AnalyticJacobians {
  JacobianField g_v;  // m x m
  JacobianField g_u;  // m x n
  JacobianField f_u;  // n x n
  JacobianField f_v;  // n x m
  JacobianField g_t;  // m x 1
};

/// A registered fast-slow pair. Treated as an immutable value once built;
/// all callables must be pure.
struct FastSlowSystem {
  std::string name;
  int n = 0;  // slow dimension
  int m = 0;  // fast dimension
  Field f;
  Field g;
  AnalyticJacobians jacobians;  // any member may be empty -> finite differences
  double eps_max = 1.0;
  /// A1 is not machine-checkable; the model author declares it.
  bool declared_smooth = true;
  /// Closed-form starting point for the QSS Newton solve, if known.
  std::function<Vector(const Vector& u, double t)> qss_seed;
  /// Equilibria of the reduced equation that slow solutions may tend to.
  std::vector<Vector> slow_equilibria;
  /// Replaces f(u, phi(u, t), t, 0) as the reduced field when set. Used to
  /// expose the literal (uncorrected) reduced predator-prey equations.
  std::function<Vector(const Vector& u, double t)> reduced_override;

  void validate() const;
};

struct State {
  double t = 0.0;
  Vector u;
  Vector v;

  bool finite() const { return u.allFinite() && v.allFinite() && std::isfinite(t); }
};

struct Derivative {
  Vector du;
  Vector dv;
};

/// Slow-time right-hand side: (f, g / eps). Requires eps in (0, eps_max].
Derivative eval_rhs(const FastSlowSystem& sys, const State& s, double eps);

/// Fast-time right-hand side (tau = t / eps): (eps f, g).
Derivative eval_rhs_fast(const FastSlowSystem& sys, const State& s, double eps);

/// Analytic Jacobian if registered, otherwise central differences with step
/// max(1e-6, 1e-6 |x_j|) per column. Rows index outputs, columns inputs.
Matrix jacobian(const FastSlowSystem& sys, Partial which, const State& s, double eps);

/// Always the finite-difference route (used to audit analytic Jacobians).
Matrix jacobian_fd(const FastSlowSystem& sys, Partial which, const State& s, double eps);

Vector eval_f(const FastSlowSystem& sys, const Vector& u, const Vector& v, double t, double eps);
Vector eval_g(const FastSlowSystem& sys, const Vector& u, const Vector& v, double t, double eps);

// ---------------------------------------------------------------------------
// Trajectory: strictly increasing time stamps with vector samples.
// ---------------------------------------------------------------------------

struct TrajectoryMeta {
  std::string integrator;
  double rel_tol = 0.0;
  double abs_tol = 0.0;
  double eps = 0.0;
  long steps = 0;
};

class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(std::vector<double> times, std::vector<Vector> values, TrajectoryMeta meta = {});

  std::size_t size() const { return times_.size(); }
  double t_first() const { return times_.front(); }
  double t_last() const { return times_.back(); }
  const std::vector<double>& times() const { return times_; }
  const std::vector<Vector>& values() const { return values_; }
  double time(std::size_t i) const { return times_[i]; }
  const Vector& value(std::size_t i) const { return values_[i]; }
  const TrajectoryMeta& meta() const { return meta_; }
  TrajectoryMeta& meta() { return meta_; }

  /// Linear interpolation between the bracketing samples; exact at samples.
  Vector at(double t) const;

  /// Splits sample i into a State with the first n components as u.
  State state(std::size_t i, int n) const;

 private:
  std::vector<double> times_;
  std::vector<Vector> values_;
  TrajectoryMeta meta_;
};

inline Vector concat(const Vector& a, const Vector& b) {
  Vector out(a.size() + b.size());
  out << a, b;
  return out;
}

}  // namespace tikhonov
