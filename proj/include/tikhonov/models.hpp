#pragma once

#include <vector>

#include "tikhonov/core.hpp"

namespace tikhonov::models {

// ---------------------------------------------------------------------------
// Predator-prey with fast prey migration between a grazing patch and a
// refuge. Slow state u = (n, p) with n the total prey, fast state v = n2
// (prey in the refuge).
// ---------------------------------------------------------------------------

struct PredPreyParams {
  double m1 = 2.0;  // migration rate out of the grazing patch
  double m2 = 1.0;  // migration rate out of the refuge
  double r1 = 1.0;
  double r2 = 2.0;
  double a = 1.0;  // predation rate
  double b = 0.9;  // biomass conversion
  double d = 1.0;  // predator death rate

  double M1() const { return m1 / (m1 + m2); }
  double M2() const { return m2 / (m1 + m2); }
  double rbar() const { return M2() * r1 + M1() * r2; }
  void validate() const;
};

/// (n, n2, p) at t = 0 used for the comparison runs.
Vector predprey_default_init();

/// `literal_reduced` swaps the reduced field for the uncorrected printed form
/// (n' = n(rbar - a M1 p), p' = b M2 n - d); the full system is unaffected.
FastSlowSystem predprey_system(const PredPreyParams& p, bool literal_reduced = false);

/// Reduced field as printed, without the sign and factor corrections.
Vector predprey_literal_reduced(const PredPreyParams& p, const Vector& u);

/// Positive equilibrium (n1*, n2*, p*) of the full system at eps.
Vector predprey_equilibrium(const PredPreyParams& p, double eps);
/// The same point in the (n, n2, p) coordinates of the fast-slow form.
Vector predprey_equilibrium_total(const PredPreyParams& p, double eps);
/// Centre (d / (b M2), rbar / (a M2)) of the reduced Lotka-Volterra system.
Vector predprey_reduced_equilibrium(const PredPreyParams& p);

/// b M2 n - d ln n + a M2 p - rbar ln p, conserved by the reduced system.
double predprey_first_integral(const PredPreyParams& p, double n, double pred);

/// eps times the Jacobian of the two-patch system at its positive equilibrium.
Matrix predprey_scaled_jacobian(const PredPreyParams& p, double eps);

/// (a1, a2, a3) of lambda^3 + a1 lambda^2 + a2 lambda + a3 for the scaled
/// Jacobian, from the closed-form expressions in alpha, beta, gamma.
Vector predprey_charpoly_closed_form(const PredPreyParams& p, double eps);

// ---------------------------------------------------------------------------
// Allee mating model. Slow state z (total females), fast state y (searching
// females), in units of the carrying capacity.
// ---------------------------------------------------------------------------

struct AlleeParams {
  double beta = 10.0;
  double mu = 1.0;
  double lambda = 1.0;
  double xiK = 3.0;

  double R0() const { return beta / mu; }
  double growth() const { return R0() - 1.0; }
  double harvest() const { return (beta + lambda) / mu; }
  double ratio() const { return (beta + lambda) / (beta - mu); }
  void validate() const;
};

FastSlowSystem allee_system(const AlleeParams& p);

/// z / (1 + xiK z).
double allee_qss(const AlleeParams& p, double z);
/// Right-hand side of the reduced equation.
double allee_reduced_rhs(const AlleeParams& p, double z);
double allee_reduced_derivative(const AlleeParams& p, double z);

/// (1 - z)(1 + xiK z).
double allee_parabola(double xiK, double z);
/// Closed-form maximum (1 + xiK)^2 / (4 xiK), attained at (xiK - 1) / (2 xiK).
double allee_parabola_max(double xiK);

/// Real roots of xiK z^2 - (xiK - 1) z + (ratio - 1) = 0, ascending.
std::vector<double> allee_parabola_roots(double ratio, double xiK);
/// Nonnegative equilibria of the reduced equation: 0 plus the positive
/// parabola roots, ascending.
std::vector<double> allee_equilibria(const AlleeParams& p);

/// Exact layer solution phi(z_hat) + (y_hat - phi(z_hat)) exp(-(1 + xiK z_hat) tau).
double allee_layer_exact(const AlleeParams& p, double z_hat, double y_hat, double tau);

enum class AlleeRegime { allee, no_positive_equilibrium, single_positive };
const char* to_string(AlleeRegime regime);

AlleeRegime allee_regime(const AlleeParams& p);
/// Classification from (ratio, xiK) directly; ratios below 1 are reachable
/// only when lambda < 0, so this form is what exercises that branch.
AlleeRegime allee_regime(double ratio, double xiK);

}  // namespace tikhonov::models
