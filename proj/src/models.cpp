#include "tikhonov/models.hpp"

#include <algorithm>
#include <cmath>

namespace tikhonov::models {

namespace {

Matrix scalar(double x) { return Matrix::Constant(1, 1, x); }

}  // namespace

void PredPreyParams::validate() const {
  if (!(m1 > 0 && m2 > 0 && r1 > 0 && r2 > 0 && a > 0 && b > 0 && d > 0)) {
    throw Error("predprey: all parameters must be positive");
  }
}

Vector predprey_default_init() { return Vector{{3.0, 2.0, 1.0}}; }

Vector predprey_literal_reduced(const PredPreyParams& p, const Vector& u) {
  const double n = u(0);
  const double pred = u(1);
  return Vector{{n * (p.rbar() - p.a * p.M1() * pred), p.b * p.M2() * n - p.d}};
}

FastSlowSystem predprey_system(const PredPreyParams& p, bool literal_reduced) {
  p.validate();
  FastSlowSystem sys;
  sys.name = literal_reduced ? "predprey-literal" : "predprey";
  sys.n = 2;
  sys.m = 1;
  // The positive equilibrium needs m2 - eps r2 > 0; keep a factor 2 of room.
  sys.eps_max = p.m2 / (2.0 * p.r2);

  sys.f = [p](const Vector& u, const Vector& v, double, double) {
    const double n = u(0), pred = u(1), n2 = v(0);
    return Vector{{n * (p.r1 - p.a * pred) + n2 * (p.r2 - p.r1 + p.a * pred),
                   pred * (p.b * n - p.b * n2 - p.d)}};
  };
  sys.g = [p](const Vector& u, const Vector& v, double, double eps) {
    const double n = u(0), n2 = v(0);
    return Vector{{eps * n2 * p.r2 + p.m1 * n - n2 * (p.m1 + p.m2)}};
  };
  sys.jacobians.g_v = [p](const Vector&, const Vector&, double, double eps) {
    return scalar(eps * p.r2 - (p.m1 + p.m2));
  };
  sys.jacobians.g_u = [p](const Vector&, const Vector&, double, double) {
    return Matrix{{p.m1, 0.0}};
  };
  sys.jacobians.g_t = [](const Vector&, const Vector&, double, double) { return scalar(0.0); };
  sys.jacobians.f_u = [p](const Vector& u, const Vector& v, double, double) {
    const double n = u(0), pred = u(1), n2 = v(0);
    return Matrix{{p.r1 - p.a * pred, -p.a * n + p.a * n2}, {p.b * pred, p.b * n - p.b * n2 - p.d}};
  };
  sys.jacobians.f_v = [p](const Vector& u, const Vector&, double, double) {
    const double pred = u(1);
    return Matrix{{p.r2 - p.r1 + p.a * pred}, {-p.b * pred}};
  };
  sys.qss_seed = [p](const Vector& u, double) { return Vector{{p.M1() * u(0)}}; };
  sys.slow_equilibria = {predprey_reduced_equilibrium(p)};
  if (literal_reduced) {
    sys.reduced_override = [p](const Vector& u, double) { return predprey_literal_reduced(p, u); };
  }
  return sys;
}

Vector predprey_equilibrium(const PredPreyParams& p, double eps) {
  const double denom = p.m2 - eps * p.r2;
  return Vector{{p.d / p.b, p.m1 * p.d / (p.b * denom), p.r1 / p.a + p.m1 * p.r2 / (p.a * denom)}};
}

Vector predprey_equilibrium_total(const PredPreyParams& p, double eps) {
  const Vector e = predprey_equilibrium(p, eps);
  return Vector{{e(0) + e(1), e(1), e(2)}};
}

Vector predprey_reduced_equilibrium(const PredPreyParams& p) {
  return Vector{{p.d / (p.b * p.M2()), p.rbar() / (p.a * p.M2())}};
}

double predprey_first_integral(const PredPreyParams& p, double n, double pred) {
  return p.b * p.M2() * n - p.d * std::log(n) + p.a * p.M2() * pred - p.rbar() * std::log(pred);
}

Matrix predprey_scaled_jacobian(const PredPreyParams& p, double eps) {
  const double alpha = p.m1 * p.m2 / (p.m2 - eps * p.r2);
  const double beta = p.a * p.d / p.b;
  const double gamma = p.b * predprey_equilibrium(p, eps)(2);
  return Matrix{{-alpha, p.m2, -eps * beta}, {p.m1, eps * p.r2 - p.m2, 0.0}, {eps * gamma, 0.0, 0.0}};
}

Vector predprey_charpoly_closed_form(const PredPreyParams& p, double eps) {
  const double alpha = p.m1 * p.m2 / (p.m2 - eps * p.r2);
  const double beta = p.a * p.d / p.b;
  const double gamma = p.b * predprey_equilibrium(p, eps)(2);
  const double bg = eps * eps * beta * gamma;
  return Vector{{alpha + p.m2 - eps * p.r2, bg, bg * (p.m2 - eps * p.r2)}};
}

// ---------------------------------------------------------------------------

void AlleeParams::validate() const {
  if (!(beta > mu && mu > 0)) throw Error("allee: need beta > mu > 0");
  if (!(lambda >= 0)) throw Error("allee: need lambda >= 0");
  if (!(xiK > 0)) throw Error("allee: need xiK > 0");
}

double allee_qss(const AlleeParams& p, double z) { return z / (1.0 + p.xiK * z); }

double allee_reduced_rhs(const AlleeParams& p, double z) {
  return p.growth() * z * (1.0 - z) - p.harvest() * allee_qss(p, z);
}

double allee_reduced_derivative(const AlleeParams& p, double z) {
  const double s = 1.0 + p.xiK * z;
  return p.growth() * (1.0 - 2.0 * z) - p.harvest() / (s * s);
}

FastSlowSystem allee_system(const AlleeParams& p) {
  p.validate();
  FastSlowSystem sys;
  sys.name = "allee";
  sys.n = 1;
  sys.m = 1;
  sys.eps_max = 0.1;
  const double base = 1.0 + p.lambda / p.mu;

  sys.f = [p](const Vector& u, const Vector& v, double, double) {
    const double z = u(0), y = v(0);
    return Vector{{p.growth() * z * (1.0 - z) - p.harvest() * y}};
  };
  sys.g = [p, base](const Vector& u, const Vector& v, double, double eps) {
    const double z = u(0), y = v(0);
    return Vector{{-eps * (base + p.growth() * z) * y - p.xiK * y * z + z - y}};
  };
  sys.jacobians.g_v = [p, base](const Vector& u, const Vector&, double, double eps) {
    const double z = u(0);
    return scalar(-eps * (base + p.growth() * z) - p.xiK * z - 1.0);
  };
  sys.jacobians.g_u = [p](const Vector&, const Vector& v, double, double eps) {
    const double y = v(0);
    return scalar(-eps * p.growth() * y - p.xiK * y + 1.0);
  };
  sys.jacobians.g_t = [](const Vector&, const Vector&, double, double) { return scalar(0.0); };
  sys.jacobians.f_u = [p](const Vector& u, const Vector&, double, double) {
    return scalar(p.growth() * (1.0 - 2.0 * u(0)));
  };
  sys.jacobians.f_v = [p](const Vector&, const Vector&, double, double) { return scalar(-p.harvest()); };
  sys.qss_seed = [p](const Vector& u, double) { return Vector{{allee_qss(p, u(0))}}; };
  for (double z : allee_equilibria(p)) sys.slow_equilibria.push_back(Vector{{z}});
  return sys;
}

double allee_parabola(double xiK, double z) { return (1.0 - z) * (1.0 + xiK * z); }

double allee_parabola_max(double xiK) { return (1.0 + xiK) * (1.0 + xiK) / (4.0 * xiK); }

std::vector<double> allee_parabola_roots(double ratio, double xiK) {
  // xiK z^2 - (xiK - 1) z + (ratio - 1) = 0
  const double A = xiK, B = -(xiK - 1.0), C = ratio - 1.0;
  const double disc = B * B - 4.0 * A * C;
  if (disc < 0) return {};
  if (disc == 0) return {-B / (2.0 * A)};
  // Cancellation-free pair.
  const double q = -0.5 * (B + std::copysign(std::sqrt(disc), B));
  std::vector<double> roots{q / A, C / q};
  if (q == 0) roots = {0.0, -B / A};
  std::sort(roots.begin(), roots.end());
  return roots;
}

std::vector<double> allee_equilibria(const AlleeParams& p) {
  std::vector<double> out{0.0};
  for (double z : allee_parabola_roots(p.ratio(), p.xiK)) {
    if (z > 0) out.push_back(z);
  }
  return out;
}

double allee_layer_exact(const AlleeParams& p, double z_hat, double y_hat, double tau) {
  const double phi = allee_qss(p, z_hat);
  return phi + (y_hat - phi) * std::exp(-(1.0 + p.xiK * z_hat) * tau);
}

const char* to_string(AlleeRegime regime) {
  switch (regime) {
    case AlleeRegime::allee: return "allee";
    case AlleeRegime::no_positive_equilibrium: return "no_positive_equilibrium";
    case AlleeRegime::single_positive: return "single_positive";
  }
  return "?";
}

AlleeRegime allee_regime(double ratio, double xiK) {
  if (xiK > 1.0 && ratio > 1.0 && ratio < allee_parabola_max(xiK)) return AlleeRegime::allee;
  int positive = 0;
  for (double z : allee_parabola_roots(ratio, xiK)) {
    if (z > 0) ++positive;
  }
  if (positive == 0) return AlleeRegime::no_positive_equilibrium;
  return positive == 1 ? AlleeRegime::single_positive : AlleeRegime::allee;
}

AlleeRegime allee_regime(const AlleeParams& p) {
  p.validate();
  return allee_regime(p.ratio(), p.xiK);
}

}  // namespace tikhonov::models
