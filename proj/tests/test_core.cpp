#include <doctest.h>

#include <random>

#include "test_systems.hpp"
#include "tikhonov/core.hpp"
#include "tikhonov/integrate.hpp"
#include "tikhonov/models.hpp"

using namespace tikhonov;

TEST_CASE("eval_rhs on the predator-prey system at (n, n2, p) = (3, 2, 1)") {
  const models::PredPreyParams p;
  const FastSlowSystem sys = models::predprey_system(p);
  const State s{0.0, Vector{{3.0, 1.0}}, Vector{{2.0}}};
  const double eps = 0.05;
  const Derivative d = eval_rhs(sys, s, eps);

  // Oracle: the two-patch equations summed, with n1 = n - n2 = 1.
  const double n1 = 1.0, n2 = 2.0, pred = 1.0;
  const double dn1 = n1 * (p.r1 - p.a * pred) + (p.m2 * n2 - p.m1 * n1) / eps;
  const double dn2 = n2 * p.r2 + (p.m1 * n1 - p.m2 * n2) / eps;
  CHECK(d.du(0) == doctest::Approx(dn1 + dn2).epsilon(1e-12));
  CHECK(d.du(0) == doctest::Approx(4.0));
  CHECK(d.dv(0) == doctest::Approx(dn2).epsilon(1e-12));
  CHECK(d.dv(0) == doctest::Approx(4.0));
  CHECK(d.du(1) == doctest::Approx(pred * (p.b * n1 - p.d)));
}

TEST_CASE("eval_rhs of a zero field is zero") {
  FastSlowSystem sys;
  sys.n = 2;
  sys.m = 1;
  sys.f = [](const Vector&, const Vector&, double, double) { return Vector::Zero(2).eval(); };
  sys.g = [](const Vector&, const Vector&, double, double) { return Vector::Zero(1).eval(); };
  const Derivative d = eval_rhs(sys, State{0.0, Vector{{1.0, 2.0}}, Vector{{3.0}}}, 0.1);
  CHECK(d.du.isZero(0));
  CHECK(d.dv.isZero(0));
}

TEST_CASE("Allee g vanishes on the slow manifold at eps = 0") {
  const models::AlleeParams p;
  const FastSlowSystem sys = models::allee_system(p);
  const double z2 = models::allee_equilibria(p).at(1);
  const Vector g = eval_g(sys, Vector{{z2}}, Vector{{models::allee_qss(p, z2)}}, 0.0, 0.0);
  CHECK(std::abs(g(0)) < 1e-15);
}

TEST_CASE("eval_rhs rejects eps outside (0, eps_max] and non-finite output") {
  const FastSlowSystem sys = testsys::linear();
  const State s{0.0, testsys::v1(1.0), testsys::v1(1.0)};
  CHECK_THROWS_AS(eval_rhs(sys, s, 0.0), Error);
  CHECK_THROWS_AS(eval_rhs(sys, s, 2.0), Error);

  FastSlowSystem bad = sys;
  bad.g = [](const Vector&, const Vector&, double, double) { return testsys::v1(std::nan("")); };
  CHECK_THROWS_AS(eval_rhs(bad, s, 0.5), NonFiniteOutput);
}

TEST_CASE("jacobian examples") {
  const models::AlleeParams ap;
  const FastSlowSystem allee = models::allee_system(ap);
  const State s{0.0, Vector{{1.0}}, Vector{{0.25}}};
  CHECK(jacobian(allee, Partial::g_v, s, 0.0)(0, 0) == doctest::Approx(-4.0));
  CHECK(jacobian_fd(allee, Partial::g_v, s, 0.0)(0, 0) == doctest::Approx(-4.0).epsilon(1e-9));

  const FastSlowSystem pp = models::predprey_system(models::PredPreyParams{});
  CHECK(jacobian(pp, Partial::g_v, State{0.0, Vector{{3.0, 1.0}}, Vector{{2.0}}}, 0.0)(0, 0) == -3.0);

  // g = C v + B u is linear: finite differences are exact up to roundoff.
  const FastSlowSystem lin = testsys::linear2();
  const State s2{0.0, Vector{{0.3, -1.2}}, Vector{{2.0, 0.7}}};
  const Matrix C{{-3.0, 1.0}, {0.5, -2.0}};
  CHECK((jacobian(lin, Partial::g_v, s2, 0.1) - C).norm() < 1e-9);
  CHECK(jacobian(lin, Partial::g_u, s2, 0.1).rows() == 2);
  CHECK(jacobian(lin, Partial::g_t, s2, 0.1).isZero(1e-9));
}

namespace {

void check_analytic_against_fd(const FastSlowSystem& sys, const std::function<State(std::mt19937_64&)>& draw,
                               double eps_hi) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> eps_dist(0.0, eps_hi);
  for (int k = 0; k < 100; ++k) {
    const State s = draw(rng);
    const double eps = eps_dist(rng);
    for (Partial which : {Partial::g_v, Partial::g_u, Partial::f_u, Partial::f_v, Partial::g_t}) {
      const Matrix a = jacobian(sys, which, s, eps);
      const Matrix fd = jacobian_fd(sys, which, s, eps);
      CHECK_MESSAGE((a - fd).norm() <= 1e-5 * (1.0 + a.norm()), to_string(which));
    }
  }
}

}  // namespace

TEST_CASE("analytic Jacobians agree with finite differences on 100 random states") {
  check_analytic_against_fd(
      models::predprey_system(models::PredPreyParams{}),
      [](std::mt19937_64& rng) {
        std::uniform_real_distribution<double> d(0.1, 8.0);
        return State{d(rng), Vector{{d(rng), d(rng)}}, Vector{{d(rng)}}};
      },
      0.25);
  check_analytic_against_fd(
      models::allee_system(models::AlleeParams{}),
      [](std::mt19937_64& rng) {
        std::uniform_real_distribution<double> d(0.0, 1.5);
        return State{d(rng), Vector{{d(rng)}}, Vector{{d(rng)}}};
      },
      0.1);
}

TEST_CASE("slow-time and fast-time forms integrate to the same state") {
  const FastSlowSystem sys = models::allee_system(models::AlleeParams{});
  const double eps = 0.05, dt = 0.5;
  const Vector y0{{0.3, 0.0}};
  IntegratorConfig cfg;
  cfg.rel_tol = 1e-11;
  cfg.abs_tol = 1e-13;
  const Rhs slow = [&](double t, const Vector& y) {
    const Derivative d = eval_rhs(sys, State{t, y.head(1), y.tail(1)}, eps);
    return concat(d.du, d.dv);
  };
  const Rhs fast = [&](double tau, const Vector& y) {
    const Derivative d = eval_rhs_fast(sys, State{eps * tau, y.head(1), y.tail(1)}, eps);
    return concat(d.du, d.dv);
  };
  const Trajectory a = integrate(slow, y0, 0.0, dt, cfg);
  const Trajectory b = integrate(fast, y0, 0.0, dt / eps, cfg);
  CHECK((a.value(a.size() - 1) - b.value(b.size() - 1)).norm() < 1e-8);
}

TEST_CASE("Trajectory invariants") {
  CHECK_THROWS_AS(Trajectory({0.0}, {testsys::v1(1.0)}), Error);
  CHECK_THROWS_AS(Trajectory({0.0, 0.0}, {testsys::v1(1.0), testsys::v1(2.0)}), Error);
  CHECK_THROWS_AS(Trajectory({1.0, 0.0}, {testsys::v1(1.0), testsys::v1(2.0)}), Error);

  const Trajectory tr({0.0, 1.0, 3.0}, {Vector{{0.0, 1.0}}, Vector{{2.0, 1.0}}, Vector{{4.0, -3.0}}});
  CHECK(tr.at(1.0) == Vector{{2.0, 1.0}});
  // Interpolant is the convex combination of the bracketing samples.
  const Vector mid = tr.at(2.0);
  CHECK(mid(0) == doctest::Approx(3.0));
  CHECK(mid(1) == doctest::Approx(-1.0));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> d(0.0, 3.0);
  for (int k = 0; k < 50; ++k) {
    const double t = d(rng);
    const Vector x = tr.at(t);
    const std::size_t hi = t < 1.0 ? 1 : 2;
    const Vector& a = tr.value(hi - 1);
    const Vector& b = tr.value(hi);
    const double w = (t - tr.time(hi - 1)) / (tr.time(hi) - tr.time(hi - 1));
    CHECK((x - ((1 - w) * a + w * b)).norm() < 1e-14);
  }
  const State s = tr.state(2, 1);
  CHECK(s.t == 3.0);
  CHECK(s.u(0) == 4.0);
  CHECK(s.v(0) == -3.0);
}
