#include <doctest.h>

#include <cmath>

#include "test_systems.hpp"
#include "tikhonov/integrate.hpp"
#include "tikhonov/layer.hpp"
#include "tikhonov/models.hpp"
#include "tikhonov/reduction.hpp"

using namespace tikhonov;
using testsys::v1;

namespace {

// z3 and z2 of the default Allee model: roots of 3 z^2 - 2 z + 2/9 = 0.
const double kZ3 = (2.0 + std::sqrt(4.0 - 8.0 / 3.0)) / 6.0;
const double kZ2 = (2.0 - std::sqrt(4.0 - 8.0 / 3.0)) / 6.0;

}  // namespace

TEST_CASE("solve_qss examples") {
  const models::PredPreyParams p;
  const FastSlowSystem pp = models::predprey_system(p);
  for (double seed : {-50.0, 0.0, 2.0, 1e3}) {
    const QssResult q = solve_qss(pp, Vector{{3.0, 1.0}}, 0.0, v1(seed));
    CHECK(q.v_root(0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(std::abs(q.residual) <= 1e-12);
  }
  CHECK(p.M1() == doctest::Approx(2.0 / 3.0));

  const FastSlowSystem allee = models::allee_system(models::AlleeParams{});
  const QssResult qa = solve_qss(allee, v1(1.0), 0.0, v1(0.0));
  CHECK(qa.v_root(0) == doctest::Approx(0.25).epsilon(1e-12));
  // phi_u of z / (1 + 3 z) is 1 / (1 + 3 z)^2.
  CHECK(qa.phi_u(0, 0) == doctest::Approx(1.0 / 16.0).epsilon(1e-9));
  CHECK(qa.g_v(0, 0) == doctest::Approx(-4.0));

  const FastSlowSystem lin = testsys::linear();
  const QssResult ql = solve_qss(lin, v1(0.7), 0.0, v1(0.7));
  CHECK(ql.newton_iters <= 1);
  CHECK(ql.v_root(0) == 0.7);
}

TEST_CASE("solve_qss error paths") {
  // Fold at u = 0: the root v = 0 is not isolated.
  CHECK_THROWS_AS(solve_qss(testsys::fold(), v1(0.0), 0.0, v1(0.0)), SingularJacobian);
  // u = -1: u - v^2 has no real root, Newton wanders.
  CHECK_THROWS_AS(solve_qss(testsys::fold(), v1(-1.0), 0.0, v1(0.5)), NoConvergence);
  // Away from the fold the positive branch is found.
  CHECK(solve_qss(testsys::fold(), v1(4.0), 0.0, v1(1.0)).v_root(0) == doctest::Approx(2.0));
}

TEST_CASE("QSS idempotence") {
  const FastSlowSystem allee = models::allee_system(models::AlleeParams{});
  for (double z : {0.05, 0.3, 0.9, 2.0}) {
    const QssResult first = solve_qss(allee, v1(z), 0.0, v1(0.0));
    const QssResult again = solve_qss(allee, v1(z), 0.0, first.v_root);
    CHECK(again.newton_iters <= 1);
    CHECK(std::abs(again.v_root(0) - first.v_root(0)) <= 1e-15);
  }
  const FastSlowSystem lin2 = testsys::linear2();
  const Vector u{{0.4, -1.0}};
  const QssResult q = solve_qss(lin2, u, 0.0, Vector::Zero(2));
  const QssResult q2 = solve_qss(lin2, u, 0.0, q.v_root);
  CHECK(q2.newton_iters <= 1);
  CHECK((q2.v_root - q.v_root).norm() <= 1e-14);
  // phi_u solves g_v phi_u = -g_u.
  CHECK((q.g_v * q.phi_u + q.g_u).norm() <= 1e-10);
}

TEST_CASE("reduced_rhs examples") {
  const models::AlleeParams ap;
  const FastSlowSystem allee = models::allee_system(ap);
  for (double z : {0.05, 0.2, 0.6, 1.5}) {
    const double want = (ap.R0() - 1) * z * (1 - z) - ((ap.beta + ap.lambda) / ap.mu) * z / (1 + ap.xiK * z);
    CHECK(reduced_rhs(allee, v1(z), 0.0, v1(0.0))(0) == doctest::Approx(want).epsilon(1e-12));
  }
  CHECK(std::abs(reduced_rhs(allee, v1(kZ3), 0.0, v1(0.0))(0)) < 1e-12);

  const models::PredPreyParams p;
  CHECK(p.rbar() == doctest::Approx(5.0 / 3.0));
  const FastSlowSystem pp = models::predprey_system(p);
  const Vector u{{2.0, 3.0}};
  const Vector F = reduced_rhs(pp, u, 0.0, v1(0.0));
  CHECK(F(0) == doctest::Approx(2.0 * (p.rbar() - p.a * p.M2() * 3.0)));
  CHECK(F(1) == doctest::Approx(3.0 * (p.b * p.M2() * 2.0 - p.d)));
  const Vector star{{p.d / (p.b * p.M2()), p.rbar() / (p.a * p.M2())}};
  CHECK(star(0) == doctest::Approx(10.0 / 3.0));
  CHECK(star(1) == doctest::Approx(5.0));
  CHECK(reduced_rhs(pp, star, 0.0, v1(0.0)).norm() < 1e-12);

  // The literal form differs and is not at rest there.
  const FastSlowSystem lit = models::predprey_system(p, true);
  CHECK(reduced_rhs(lit, star, 0.0, v1(0.0)).norm() > 1.0);
}

TEST_CASE("Allee reduced_rhs vanishes exactly at 0, z2, z3") {
  const FastSlowSystem allee = models::allee_system(models::AlleeParams{});
  auto F = [&](double z) { return reduced_rhs(allee, v1(z), 0.0, v1(0.0))(0); };
  for (double z : {0.0, kZ2, kZ3}) CHECK(std::abs(F(z)) < 1e-12);
  CHECK(kZ3 == doctest::Approx(0.525783).epsilon(1e-6));
  // Sign pattern: Allee threshold at z2, stable at z3.
  CHECK(F(0.5 * kZ2) < 0);
  CHECK(F(0.5 * (kZ2 + kZ3)) > 0);
  CHECK(F(1.2 * kZ3) < 0);
  // Scan for any other root on (0, 3].
  int changes = 0;
  double prev = F(1e-4);
  for (int k = 1; k <= 3000; ++k) {
    const double cur = F(1e-4 + k * 1e-3);
    changes += (cur > 0) != (prev > 0);
    prev = cur;
  }
  CHECK(changes == 2);
}

TEST_CASE("integrate_reduced on the Allee model") {
  const FastSlowSystem allee = models::allee_system(models::AlleeParams{});
  const auto grid = uniform_grid(0.0, 100.0, 0.5);
  const SlowSolution low = integrate_reduced(allee, v1(0.1), grid);
  CHECK(std::abs(low.traj.value(low.traj.size() - 1)(0)) < 1e-8);
  const SlowSolution mid = integrate_reduced(allee, v1(0.2), grid);
  CHECK(mid.traj.value(mid.traj.size() - 1)(0) == doctest::Approx(kZ3).epsilon(1e-8));
  REQUIRE(mid.vbar.size() == grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double z = mid.traj.value(i)(0);
    CHECK(mid.vbar[i](0) == doctest::Approx(z / (1 + 3 * z)).epsilon(1e-12));
  }
  CHECK(mid.min_pivot() > 0.5);
}

TEST_CASE("integrate_reduced on the linear model equals the exponential") {
  const auto grid = uniform_grid(0.0, 5.0, 0.25);
  const SlowSolution s = integrate_reduced(testsys::linear(), v1(2.0), grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(std::abs(s.traj.value(i)(0) - 2.0 * std::exp(-grid[i])) < 1e-9);
    CHECK(s.vbar[i](0) == doctest::Approx(s.traj.value(i)(0)));
  }
}

TEST_CASE("integrate_reduced bound violation") {
  FastSlowSystem grow = testsys::linear();
  grow.f = [](const Vector& u, const Vector&, double, double) { return Vector(u); };
  const auto grid = uniform_grid(0.0, 30.0, 1.0);
  CHECK_THROWS_AS(integrate_reduced(grow, v1(1.0), grid), BoundednessViolation);
}

TEST_CASE("manifold consistency along a slow solution") {
  const models::AlleeParams ap;
  const FastSlowSystem allee = models::allee_system(ap);
  const double dt = 0.01;
  const auto grid = uniform_grid(0.0, 10.0, dt);
  const SlowSolution s = integrate_reduced(allee, v1(0.2), grid);
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
    const double fd = (s.vbar[i + 1](0) - s.vbar[i - 1](0)) / (2 * dt);
    const QssResult& q = s.qss_chain[i];
    const Vector udot = reduced_rhs(allee, s.traj.value(i), grid[i], q.v_root);
    const double chain = (q.phi_u * udot + q.phi_t)(0);
    worst = std::max(worst, std::abs(fd - chain));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("predator-prey full equilibria converge linearly to the reduced centre") {
  const models::PredPreyParams p;
  const FastSlowSystem sys = models::predprey_system(p);
  const Vector star = models::predprey_reduced_equilibrium(p);
  std::vector<double> dist;
  for (double eps : {0.05, 0.025, 0.0125}) {
    const Vector e = models::predprey_equilibrium_total(p, eps);  // (n, n2, p)
    const Vector u{{e(0), e(2)}};
    // Independent check: the full right-hand side vanishes there.
    const Derivative d = eval_rhs(sys, State{0.0, u, e.segment(1, 1)}, eps);
    CHECK(d.du.norm() < 1e-9);
    CHECK(d.dv.norm() < 1e-9);
    dist.push_back((u - star).norm());
  }
  CHECK(dist[0] / dist[1] == doctest::Approx(2.0).epsilon(0.1));
  CHECK(dist[1] / dist[2] == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("composite_v starts at v_hat and matches the exact Allee layer") {
  const models::AlleeParams ap;
  const FastSlowSystem allee = models::allee_system(ap);
  const double eps = 0.02, z_hat = 0.4, y_hat = 0.0;
  const auto grid = uniform_grid(0.0, 2.0, 0.001);
  const SlowSolution slow = integrate_reduced(allee, v1(z_hat), grid);
  const LayerSolution layer = integrate_layer(allee, v1(z_hat), v1(y_hat), 2.0 / eps);
  CHECK(composite_v(slow, layer, eps, 0.0)(0) == y_hat);
  const double phi_hat = models::allee_qss(ap, z_hat);
  for (double t : {0.0005, 0.003, 0.01, 0.02, 0.05, 0.2, 1.5}) {
    const double want = slow.vbar_at(t)(0) + models::allee_layer_exact(ap, z_hat, y_hat, t / eps) - phi_hat;
    CHECK(std::abs(composite_v(slow, layer, eps, t)(0) - want) < 1e-6);
  }
  // Well past the layer the composite is the manifold itself.
  CHECK(std::abs(composite_v(slow, layer, eps, 1.5)(0) - slow.vbar_at(1.5)(0)) < 1e-12);
}

TEST_CASE("error_curves on the closed-form linear model") {
  const FastSlowSystem lin = testsys::linear();
  const double u0 = 1.0, v0 = -0.5, T = 5.0;
  for (double eps : {0.05, 0.025}) {
    const auto grid = uniform_grid(0.0, T, 0.005);
    IntegratorConfig cfg = full_system_config(eps);
    cfg.rel_tol = 1e-11;
    cfg.abs_tol = 1e-13;
    const Trajectory full = integrate_full(lin, v1(u0), v1(v0), eps, grid, cfg);
    const SlowSolution slow = integrate_reduced(lin, v1(u0), grid);
    const LayerSolution layer = integrate_layer(lin, v1(u0), v1(v0), T / eps);
    const ErrorCurves ec = error_curves(full, slow, layer, eps, grid);
    CHECK(ec.err_composite.front() == 0.0);
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto [u, v] = testsys::linear_exact(u0, v0, eps, grid[i]);
      const double composite = u0 * std::exp(-grid[i]) + (v0 - u0) * std::exp(-grid[i] / eps);
      worst = std::max(worst, std::abs(ec.err_composite[i] - std::abs(v - composite)));
      CHECK(ec.err_u[i] < 1e-8);
    }
    CHECK(worst < 1e-6);
    // |v - composite| <= 2 |u0| eps / (1 - eps) from the closed form.
    CHECK(ec.sup_composite <= 2 * u0 * eps / (1 - eps) + 1e-6);
    CHECK(ec.sup_composite >= 0.5 * u0 * eps);
    CHECK(ec.t_rho > 0.0);
    CHECK(ec.sup_v_after_t_rho <= u0 * eps / (1 - eps) + 1e-3 + 1e-6);
  }
}

TEST_CASE("halving eps roughly halves the Allee composite error") {
  const models::AlleeParams ap;
  const FastSlowSystem allee = models::allee_system(ap);
  const double T = 20.0, z_hat = 0.2, y_hat = 0.0;
  const auto grid = uniform_grid(0.0, T, 0.002);
  const SlowSolution slow = integrate_reduced(allee, v1(z_hat), grid);
  std::vector<double> sups;
  for (double eps : {0.04, 0.02}) {
    const Trajectory full = integrate_full(allee, v1(z_hat), v1(y_hat), eps, grid, full_system_config(eps));
    const LayerSolution layer = integrate_layer(allee, v1(z_hat), v1(y_hat), T / eps);
    sups.push_back(error_curves(full, slow, layer, eps, grid).sup_composite);
  }
  CHECK(sups[1] / sups[0] == doctest::Approx(0.5).epsilon(0.4));
}
