#include <doctest.h>

#include <cmath>

#include "rel/conjugate.hpp"
#include "rel/curvature.hpp"
#include "rel/errors.hpp"
#include "rel/flow.hpp"
#include "support.hpp"

using namespace rel;
using test::two_pi;

TEST_CASE("constants solve the conjugate equation on the flat torus") {
  const FlowTrajectory traj = evolve(test::flat(16), 0.01, 1e-3, 1.0);
  const ConjugateSolution sol = solve_conjugate_heat(traj, traj[0].constant_field(2.5));
  REQUIRE(sol.H.size() == traj.size());
  for (const auto& H : sol.H) CHECK(test::max_diff(H, traj[0].constant_field(2.5)) == 0.0);
  CHECK(sol.C2 == 0.0);
  for (std::size_t k = 0; k < traj.size(); ++k) CHECK(mass(sol, traj, k) == doctest::Approx(2.5).epsilon(1e-15));

  const PositivityReport pos = positivity_floor(sol, traj);
  CHECK(pos.pass);
  CHECK(pos.min_margin == 0.0);
  CHECK(pos.min_H0 == 2.5);
  for (double f : pos.floor) CHECK(f == 2.5);
}

TEST_CASE("separable solution on the flat torus") {
  // H(t1) = 1 + 0.5 sin(2 pi x) gives H(t1 - s) = 1 + 0.5 e^{-(2 pi)^2 s} sin(2 pi x).
  const double t1 = 0.01;
  const FlowTrajectory traj = evolve(test::flat(64), t1, 1e-3, 1.0);
  const TorusGrid& grid = traj[0].torus().grid;
  const ConjugateSolution sol =
      solve_conjugate_heat(traj, test::sample(grid, [](double x, double) { return 1.0 + 0.5 * std::sin(two_pi * x); }));
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double s = t1 - traj.time(k);
    const double err = test::max_error(sol.H[k], grid, [&](double x, double) {
      return 1.0 + 0.5 * std::exp(-two_pi * two_pi * s) * std::sin(two_pi * x);
    });
    // Spatial error 0.5 s |k2 - (2 pi)^2| is about 6e-5 at s = 0.01; time stepping adds less.
    CHECK(err < 1.5e-4);
  }
}

TEST_CASE("sphere: conjugate solution follows the scalar ODE") {
  // H_t = R(t) H with R = 2/(1 - 2t) on the shrinking unit S^2, integrated
  // backward from t1 by a classical RK4 in the test.
  const double t1 = 0.2;
  const FlowTrajectory traj = evolve(make_sphere(2, 1.0), t1, 1e-2, 0.5);
  const ConjugateSolution sol = solve_conjugate_heat(traj, ScalarField::constant(3.0));
  auto rhs = [](double t, double H) { return 2.0 / (1.0 - 2.0 * t) * H; };
  double H = 3.0, t = t1;
  const int steps = 2000;
  const double ds = -t1 / steps;
  for (int s = 0; s < steps; ++s) {
    const double k1 = rhs(t, H), k2 = rhs(t + ds / 2, H + ds / 2 * k1), k3 = rhs(t + ds / 2, H + ds / 2 * k2),
                 k4 = rhs(t + ds, H + ds * k3);
    H += ds / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    t += ds;
  }
  CHECK(sol.H.front()[0] == doctest::Approx(H).epsilon(1e-12));
  // Mass is conserved exactly: H Vol is constant.
  for (std::size_t k = 0; k < traj.size(); ++k) CHECK(mass(sol, traj, k) == doctest::Approx(3.0 * 4.0 * test::pi * 0.6));
}

TEST_CASE("positivity floor formula") {
  FlowTrajectory traj;
  traj.states = {test::flat(8), test::flat(8)};
  traj.t0 = 0.0;
  traj.dt = 0.1;
  traj.t0_prime = 1.0;
  ConjugateSolution sol;
  sol.H = {traj[0].constant_field(1.0), traj[0].constant_field(1.0)};
  sol.C2 = 2.0;
  sol.t1 = 0.1;
  const PositivityReport pos = positivity_floor(sol, traj);
  CHECK(pos.floor[0] == doctest::Approx(std::exp(-0.2)).epsilon(1e-15));
  CHECK(pos.floor[0] == doctest::Approx(0.8187).epsilon(1e-4));
  CHECK(pos.floor[1] == 1.0);
  CHECK(pos.pass);
}

TEST_CASE("perturbed torus: positive margin, conserved mass") {
  const FlowTrajectory traj = evolve(test::sinx(32, 0.1), 0.01, 1e-4, 0.1);
  const TorusGrid& grid = traj[0].torus().grid;
  const ScalarField H1 = test::sample(grid, [](double x, double y) { return 1.0 + 0.3 * std::cos(two_pi * (x + y)); });
  const ConjugateSolution sol = solve_conjugate_heat(traj, H1);
  const PositivityReport pos = positivity_floor(sol, traj);
  CHECK(pos.pass);
  CHECK(pos.min_margin >= 0.0);
  CHECK(sol.C2 == doctest::Approx(scalar_curvature(traj[0]).max_abs()).epsilon(1e-12));
  const double m1 = mass(sol, traj, traj.size() - 1);
  for (std::size_t k = 0; k < traj.size(); ++k) CHECK(std::abs(mass(sol, traj, k) / m1 - 1.0) < 1e-4);
}

TEST_CASE("final data must be positive") {
  const FlowTrajectory traj = evolve(test::flat(8), 0.001, 1e-3, 1.0);
  CHECK_THROWS_AS(solve_conjugate_heat(traj, traj[0].constant_field(0.0)), PreconditionError);
  CHECK_THROWS_AS(solve_conjugate_heat(traj, ScalarField(16, 16, 1.0)), PreconditionError);
}

TEST_CASE("H and f transforms") {
  const double tau = 0.7;
  const ScalarField H = ScalarField(8, 8, std::pow(4 * test::pi * tau, -1.0));
  FlowTrajectory traj;
  traj.states = {test::flat(8)};
  traj.t0_prime = tau;
  ConjugateSolution sol{{H}, {}, 0.0, 0.0};
  CHECK(H_to_f(sol, traj).front().max_abs() < 1e-15);

  traj.t0_prime = 1.0 / (4 * test::pi);
  sol.H = {ScalarField(8, 8, 1.0)};
  CHECK(H_to_f(sol, traj).front().max_abs() < 1e-15);

  const TorusGrid grid = test::unit_grid(16);
  const ScalarField f = test::sample(grid, [](double x, double y) { return 3.0 * std::sin(two_pi * x) - y; });
  traj.states = {make_torus(1, 1, 16, 16, grid.zeros())};
  traj.t0_prime = tau;
  sol.H = {f_to_H(f, tau, 2)};
  CHECK(test::max_diff(H_to_f(sol, traj).front(), f) < 1e-14);
  CHECK(constraint_value(traj[0].constant_field(std::log(1.0 / (4 * test::pi * tau))), traj[0], tau) ==
        doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("PDE residual of the transformed equation shrinks under refinement") {
  // f_t = -Lap f + |grad f|^2 - R + n/(2 tau); the centered residual at an
  // interior time is O(dt + h^2).
  auto residual = [](int N, double dt) {
    const FlowTrajectory traj = evolve(test::sinx(N, 0.1), 0.004, dt, 0.1);
    const TorusGrid& grid = traj[0].torus().grid;
    const ConjugateSolution sol = solve_conjugate_heat(
        traj, test::sample(grid, [](double x, double y) { return 1.0 + 0.3 * std::cos(two_pi * (x + y)); }));
    const auto f = H_to_f(sol, traj);
    const std::size_t k = traj.index_of(0.002);
    const ScalarField ft = (f[k + 1] - f[k - 1]) * (1.0 / (2.0 * dt));
    const ScalarField rhs = laplace_beltrami(traj[k], f[k]) * -1.0 + grad_norm_sq(traj[k], f[k]) -
                            scalar_curvature(traj[k]) + 1.0 / traj.tau(k);
    return (ft - rhs).max_abs();
  };
  const double r1 = residual(32, 4e-4), r2 = residual(64, 2e-4);
  CHECK(r2 < 0.6 * r1);
}
