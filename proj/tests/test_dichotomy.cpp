#include <doctest.h>

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "tikhonov/dichotomy.hpp"
#include "tikhonov/smalldense.hpp"

using namespace tikhonov;

namespace {

const double kTwoPi = 2 * std::numbers::pi;

Matrix tri(double t) { return Matrix{{-1.0, std::sin(t)}, {0.0, -1.0}}; }

}  // namespace

TEST_CASE("propagator examples") {
  const MatrixFunction diag = [](double) { return Matrix{{-1.0, 0.0}, {0.0, -2.0}}; };
  const Matrix y = propagator(diag, 0.1, 0.3, 0.4);
  CHECK(y(0, 0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
  CHECK(y(1, 1) == doctest::Approx(std::exp(-2.0)).epsilon(1e-9));
  CHECK(std::abs(y(0, 1)) < 1e-15);
  CHECK(propagator(diag, 0.1, 0.7, 0.7) == Matrix::Identity(2, 2));

  // Sinusoidal triangular D against a tighter self-reference.
  const MatrixFunction D = tri;
  PropagatorConfig tight;
  tight.integrator.rel_tol = 1e-12;
  tight.integrator.abs_tol = 1e-30;
  const Matrix ref = propagator(D, 0.05, 0.0, 1.0, tight);
  const Matrix got = propagator(D, 0.05, 0.0, 1.0);
  CHECK((got - ref).norm() <= 1e-8 * (1 + ref.norm()));
  // Closed form: the diagonal is e^{-(t - s)/eps}, the corner is
  // e^{-(t - s)/eps} (cos s - cos t) / eps.
  const double e = std::exp(-1.0 / 0.05);
  CHECK(ref(0, 0) == doctest::Approx(e).epsilon(1e-9));
  CHECK(ref(0, 1) == doctest::Approx(e * (1.0 - std::cos(1.0)) / 0.05).epsilon(1e-9));

  CHECK_THROWS_AS(propagator(diag, 1e-8, 0.0, 1.0), StepUnderflow);
  CHECK_THROWS_AS(propagator(diag, 0.1, 1.0, 0.5), Error);
}

TEST_CASE("propagator equals the matrix exponential for constant D") {
  const Matrix A{{-0.5, 2.0, 0.0}, {-1.0, -0.3, 0.4}, {0.2, 0.0, -1.1}};
  const MatrixFunction D = [A](double) { return A; };
  for (double eps : {1.0, 0.3}) {
    for (double lag : {0.1, 0.9, 2.0}) {
      const Matrix y = propagator(D, eps, 1.0, 1.0 + lag);
      const Matrix want = dense::expm<double>(Matrix(A * lag / eps));
      CHECK((y - want).norm() <= 1e-9 * (1 + want.norm()));
    }
  }
  // And expm itself against an eigendecomposition.
  const Eigen::EigenSolver<Matrix> es(A);
  const Eigen::MatrixXcd V = es.eigenvectors();
  const Eigen::MatrixXcd E = V * es.eigenvalues().array().exp().matrix().asDiagonal() * V.inverse();
  CHECK((dense::expm<double>(A) - E.real()).norm() < 1e-12);
}

TEST_CASE("cocycle property") {
  const MatrixFunction D = [](double t) {
    return Matrix{{-1.0 + 0.5 * std::cos(t), std::sin(2 * t)}, {0.3, -2.0}};
  };
  for (double eps : {0.5, 0.1}) {
    const double s = 0.2, r = 0.9, t = 1.7;
    const Matrix lhs = propagator(D, eps, s, t);
    const Matrix rhs = propagator(D, eps, r, t) * propagator(D, eps, s, r);
    CHECK((lhs - rhs).norm() <= 1e-7);
  }
}

TEST_CASE("fit_dichotomy on a constant diagonal matrix gives c = 1") {
  const MatrixFunction D = [](double) { return Matrix{{-1.0, 0.0}, {0.0, -2.0}}; };
  for (double eps : {0.1, 0.05}) {
    DichotomyConfig cfg;
    cfg.sigma = 0.5;
    const DichotomyFit fit = fit_dichotomy(D, eps, 5.0, cfg);
    CHECK(fit.c == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(fit.pass);
    CHECK(fit.margin == doctest::Approx(1.0));
    CHECK(fit.decay_rate == doctest::Approx(1.0 / eps).epsilon(1e-4));
    for (const auto& [s, t] : fit.grid) CHECK(s <= t);
  }
  const DichotomyFit def = fit_dichotomy(D, 0.1, 5.0);
  CHECK(def.sigma == doctest::Approx(0.5));
}

TEST_CASE("fit_dichotomy on the sinusoidal triangular matrix") {
  const MatrixFunction D = tri;
  DichotomyConfig cfg;
  cfg.sigma = 0.25;
  std::vector<double> cs, rates;
  for (double eps : {0.1, 0.05, 0.025}) {
    const DichotomyFit fit = fit_dichotomy(D, eps, kTwoPi, cfg);
    CHECK(fit.c >= 1.0);
    CHECK(fit.pass);
    cs.push_back(fit.c);
    rates.push_back(fit.decay_rate);
  }
  CHECK(cs[1] == doctest::Approx(cs[0]).epsilon(0.05));
  CHECK(cs[2] == doctest::Approx(cs[1]).epsilon(0.05));
  CHECK(rates[1] / rates[0] == doctest::Approx(2.0).epsilon(0.05));
  CHECK(rates[2] / rates[1] == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("fit_dichotomy is invariant under a one-period shift") {
  DichotomyConfig cfg;
  cfg.sigma = 0.25;
  cfg.spacing = kTwoPi / 128;
  const double eps = 0.1;
  const DichotomyFit a = fit_dichotomy(tri, eps, 2 * kTwoPi, cfg);
  const DichotomyFit b = fit_dichotomy([](double t) { return tri(t + kTwoPi); }, eps, 2 * kTwoPi, cfg);
  CHECK(std::abs(a.c - b.c) <= 1e-6 * a.c);
}

TEST_CASE("fit_dichotomy refuses an unstable D") {
  const MatrixFunction D = [](double) { return Matrix{{0.1, 0.0}, {0.0, -1.0}}; };
  CHECK_THROWS_AS(fit_dichotomy(D, 0.1, 2.0), HypothesisViolated);
}

TEST_CASE("continuity_modulus") {
  CHECK(continuity_modulus([](double) { return Matrix{{-1.0, 3.0}, {0.0, -2.0}}; }, 0.1, 10.0) == 0.0);

  const MatrixFunction D = [](double t) { return Matrix::Constant(1, 1, -2.0 + std::sin(t)); };
  double prev = INFINITY;
  for (double eps : {0.16, 0.04, 0.01, 0.0025}) {
    const double d = continuity_modulus(D, eps, 10.0);
    CHECK(d <= std::sqrt(eps) * (1 + 1e-12));
    CHECK(d <= prev * 1.01);
    if (std::isfinite(prev)) CHECK(d / prev == doctest::Approx(0.5).epsilon(0.1));
    prev = d;
  }
  // Matrix case, 2-norm.
  double last = INFINITY;
  for (double eps : {0.1, 0.05, 0.025}) {
    const double d = continuity_modulus(tri, eps, kTwoPi);
    CHECK(d <= last * 1.01);
    last = d;
  }
}
