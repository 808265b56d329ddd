#include <doctest.h>

#include <cmath>
#include <numbers>

#include "test_systems.hpp"
#include "tikhonov/integrate.hpp"
#include "tikhonov/models.hpp"
#include "tikhonov/reduction.hpp"

using namespace tikhonov;
using testsys::v1;

namespace {

const Rhs decay = [](double, const Vector& y) { return Vector(-y); };

const Rhs oscillator = [](double, const Vector& y) { return Vector{{y(1), -y(0)}}; };

IntegratorConfig rk4(double h) {
  IntegratorConfig c;
  c.method = Method::rk4_fixed;
  c.max_step = h;
  return c;
}

double last(const Trajectory& tr, int k = 0) { return tr.value(tr.size() - 1)(k); }

}  // namespace

TEST_CASE("scalar exponential at t = 1") {
  const Trajectory tr = integrate(decay, v1(1.0), 0.0, 1.0, IntegratorConfig{});
  CHECK(std::abs(last(tr) - std::exp(-1.0)) < 1e-8);
  CHECK(tr.t_last() == 1.0);
  CHECK(std::abs(last(integrate(decay, v1(1.0), 0.0, 1.0, rk4(1e-2))) - std::exp(-1.0)) < 1e-8);
}

TEST_CASE("harmonic oscillator returns after one period") {
  IntegratorConfig cfg;
  cfg.rel_tol = 1e-10;
  cfg.abs_tol = 1e-12;
  const Vector y0{{1.0, 0.0}};
  const Trajectory tr = integrate(oscillator, y0, 0.0, 2 * std::numbers::pi, cfg);
  CHECK((tr.value(tr.size() - 1) - y0).norm() < 1e-7);
}

TEST_CASE("corrected reduced Lotka-Volterra conserves its first integral") {
  const models::PredPreyParams p;
  const FastSlowSystem sys = models::predprey_system(p);
  const auto grid = uniform_grid(0.0, 100.0, 0.1);
  const SlowSolution slow = integrate_reduced(sys, Vector{{1.0, 1.0}}, grid);
  const double v0 = models::predprey_first_integral(p, 1.0, 1.0);
  double drift = 0.0;
  for (const Vector& u : slow.traj.values()) {
    drift = std::max(drift, std::abs(models::predprey_first_integral(p, u(0), u(1)) - v0));
  }
  CHECK(drift < 1e-6);

  // dV/dt = 0 along the field, checked by hand: grad V . F at a few points.
  for (const auto& [n, q] : {std::pair{1.0, 1.0}, {2.5, 4.0}, {6.0, 0.3}}) {
    const Vector F = reduced_rhs(sys, Vector{{n, q}}, 0.0, default_qss_seed(sys, Vector{{n, q}}, 0.0));
    const double dVdn = p.b * p.M2() - p.d / n;
    const double dVdp = p.a * p.M2() - p.rbar() / q;
    CHECK(std::abs(dVdn * F(0) + dVdp * F(1)) < 1e-12);
  }
}

TEST_CASE("fixed RK4 is fourth order on the scalar exponential") {
  IntegratorConfig ref_cfg;
  ref_cfg.rel_tol = 1e-13;
  ref_cfg.abs_tol = 1e-15;
  const double ref = last(integrate(decay, v1(1.0), 0.0, 1.0, ref_cfg));
  CHECK(std::abs(ref - std::exp(-1.0)) < 1e-12);
  const double e1 = std::abs(last(integrate(decay, v1(1.0), 0.0, 1.0, rk4(0.1))) - ref);
  const double e2 = std::abs(last(integrate(decay, v1(1.0), 0.0, 1.0, rk4(0.05))) - ref);
  const double ratio = e1 / e2;
  CHECK(ratio >= 16.0 * 0.7);
  CHECK(ratio <= 16.0 * 1.3);
}

TEST_CASE("adaptive and fixed runs agree at shared output times") {
  const auto grid = uniform_grid(0.0, 10.0, 0.5);
  IntegratorConfig cfg;
  const Vector y0{{1.0, 0.5}};
  const Trajectory a = integrate(oscillator, y0, 0.0, 10.0, cfg, grid);
  const Trajectory b = integrate(oscillator, y0, 0.0, 10.0, rk4(1e-3), grid);
  REQUIRE(a.size() == grid.size());
  REQUIRE(b.size() == grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(a.time(i) == grid[i]);
    CHECK(b.time(i) == grid[i]);
    CHECK((a.value(i) - b.value(i)).norm() <= 10 * cfg.rel_tol * (1 + b.value(i).norm()));
  }
}

TEST_CASE("backward Euler is contractive on a decaying rotation for any step") {
  // y' = A y with eigenvalues -0.1 +- 5i; A is normal so the 2-norm contracts.
  const Matrix A{{-0.1, -5.0}, {5.0, -0.1}};
  const Rhs rhs = [A](double, const Vector& y) { return Vector(A * y); };
  const RhsJacobian jac = [A](double, const Vector&) { return A; };
  for (double h : {0.01, 0.7, 50.0}) {
    IntegratorConfig cfg;
    cfg.method = Method::backward_euler;
    cfg.max_step = h;
    const Trajectory tr = integrate(rhs, Vector{{1.0, -2.0}}, 0.0, 100.0, cfg, {}, jac);
    for (std::size_t i = 1; i < tr.size(); ++i) {
      CHECK(tr.value(i).norm() <= tr.value(i - 1).norm() * (1 + 1e-12));
    }
  }
  // Scalar case without an analytic Jacobian.
  IntegratorConfig cfg;
  cfg.method = Method::backward_euler;
  cfg.max_step = 10.0;
  const Rhs stiff = [](double, const Vector& y) { return Vector(-1000.0 * y); };
  const Trajectory tr = integrate(stiff, v1(1.0), 0.0, 100.0, cfg);
  for (std::size_t i = 1; i < tr.size(); ++i) CHECK(std::abs(tr.value(i)(0)) <= std::abs(tr.value(i - 1)(0)));
}

TEST_CASE("integrate errors") {
  IntegratorConfig few;
  few.max_steps = 5;
  CHECK_THROWS_AS(integrate(oscillator, Vector{{1.0, 0.0}}, 0.0, 100.0, few), MaxStepsExceeded);

  const Rhs blowup = [](double, const Vector& y) { return Vector(y.array().square()); };
  CHECK_THROWS_AS(integrate(blowup, v1(1.0), 0.0, 2.0, IntegratorConfig{}), Error);

  const Rhs nan_rhs = [](double t, const Vector& y) { return t > 0.5 ? v1(std::nan("")) : Vector(-y); };
  CHECK_THROWS_AS(integrate(nan_rhs, v1(1.0), 0.0, 1.0, rk4(0.1)), NonFiniteState);

  const std::vector<double> outside{0.0, 2.0};
  CHECK_THROWS_AS(integrate(decay, v1(1.0), 0.0, 1.0, IntegratorConfig{}, outside), Error);

  IntegratorConfig bad;
  bad.rel_tol = 0.0;
  CHECK_THROWS_AS(integrate(decay, v1(1.0), 0.0, 1.0, bad), Error);
  CHECK(parse_method("backward_euler") == Method::backward_euler);
  CHECK_THROWS_AS(parse_method("euler"), Error);
}

TEST_CASE("uniform_grid ends exactly at t1") {
  const auto g = uniform_grid(0.0, 1.0, 0.3);
  CHECK(g.front() == 0.0);
  CHECK(g.back() == 1.0);
  for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] > g[i - 1]);
}

TEST_CASE("normwise error scaling survives components crossing zero") {
  IntegratorConfig cfg;
  cfg.rel_tol = 1e-10;
  cfg.abs_tol = 1e-30;
  cfg.normwise_error = true;
  const Vector y0{{1.0, 0.0}};
  const Trajectory tr = integrate(oscillator, y0, 0.0, 20.0, cfg);
  CHECK(std::abs(last(tr, 0) - std::cos(20.0)) < 1e-8);
  CHECK(std::abs(last(tr, 1) + std::sin(20.0)) < 1e-8);
}
