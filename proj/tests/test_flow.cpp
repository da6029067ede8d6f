#include <doctest.h>

#include <cmath>

#include "rel/curvature.hpp"
#include "rel/errors.hpp"
#include "rel/flow.hpp"
#include "support.hpp"

using namespace rel;
using test::two_pi;

TEST_CASE("sphere_exact examples") {
  CHECK(sphere_exact(2, 1.0, 0.0).sphere().r == 1.0);
  CHECK(sphere_exact(2, 1.0, 0.375).sphere().r == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(std::pow(sphere_exact(3, 1.0, 0.2).sphere().r, 2) == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(sphere_extinction_time(2, 1.0) == 0.5);
  CHECK_THROWS_AS(sphere_exact(2, 1.0, 0.5), PreconditionError);
}

TEST_CASE("ricci_step examples") {
  const MetricState flat = test::flat(32);
  CHECK(ricci_step(flat, 1e-4).torus().u == flat.torus().u);

  const MetricState s = ricci_step(make_sphere(2, 1.0), 0.1);
  CHECK(s.sphere().r * s.sphere().r == doctest::Approx(0.8).epsilon(1e-15));
  CHECK_THROWS_AS(ricci_step(make_sphere(2, 1.0), 0.5), PreconditionError);
  CHECK_THROWS_AS(ricci_step(flat, 1.0), PreconditionError);
  CHECK_THROWS_AS(ricci_step(flat, -1.0), PreconditionError);
}

TEST_CASE("one step on the perturbed torus shrinks u and agrees with a fine reference") {
  const double dt = 2e-6;
  const MetricState g = test::sinx(64, 0.1);
  const MetricState g1 = ricci_step(g, dt);
  CHECK(g1.torus().u.max_abs() < g.torus().u.max_abs());

  // Reference at N=256 with the same step, restricted to the shared nodes.
  const MetricState ref = ricci_step(test::sinx(256, 0.1), dt);
  double diff = 0.0;
  for (int i = 0; i < 64; ++i) diff = std::max(diff, std::abs(g1.torus().u(i, 0) - ref.torus().u(4 * i, 0)));
  const double change = (g1.torus().u - g.torus().u).max_abs();
  CHECK(diff < 2e-3 * change);
}

TEST_CASE("evolve: exact sphere law") {
  const FlowTrajectory traj = evolve(make_sphere(2, 1.0), 0.25, 1e-3, 0.5);
  CHECK(traj.size() == 251);
  CHECK(std::pow(traj.states.back().sphere().r, 2) == doctest::Approx(0.5).epsilon(1e-14));
  for (int n : {2, 3}) {
    const double r0 = 1.3;
    const FlowTrajectory t = evolve(make_sphere(n, r0), 0.1, 1e-3, 1.0);
    for (std::size_t k = 0; k < t.size(); ++k) {
      const double r2 = std::pow(t[k].sphere().r, 2);
      CHECK(std::abs(r2 - (r0 * r0 - 2.0 * (n - 1) * t.time(k))) < 1e-12);
    }
  }
  CHECK_THROWS_AS(evolve(make_sphere(2, 1.0), 0.6, 1e-3, 1.0), PreconditionError);
  CHECK_THROWS_AS(evolve(make_sphere(2, 1.0), 0.1, 1e-3, 0.05), PreconditionError);
}

TEST_CASE("evolve: flat torus is a fixed point") {
  const FlowTrajectory traj = evolve(test::flat(16), 0.01, 1e-3, 1.0);
  for (const auto& s : traj.states) CHECK(s.torus().u == traj[0].torus().u);
}

TEST_CASE("evolve: maximum principle and volume law on the perturbed torus") {
  const FlowTrajectory traj = evolve(test::sinx(64, 0.1), 0.05, 1e-3, 1.0);
  for (std::size_t k = 1; k < traj.size(); ++k) {
    CHECK(traj[k].torus().u.max_abs() < traj[k - 1].torus().u.max_abs());
    // dVol/dt = -integral of R dV = 0 on the torus.
    CHECK(total_volume(traj[k]) == doctest::Approx(total_volume(traj[0])).epsilon(1e-6));
  }
}

TEST_CASE("evolve: Gauss-Bonnet along 500 steps") {
  const FlowTrajectory traj = evolve(test::sinx(64, 0.1), 0.05, 1e-4, 1.0);
  REQUIRE(traj.size() == 501);
  for (const auto& g : traj.states) CHECK(std::abs(integrate(scalar_curvature(g), g)) < 1e-6);
}

TEST_CASE("evolve: linearized decay rate") {
  // For small eps, u_t = e^{-2u} Lap u keeps the mode sin(2 pi x) and decays it
  // at the discrete rate k2 to leading order.
  const double eps = 1e-6, t = 0.01;
  const FlowTrajectory traj = evolve(test::sinx(64, eps), t, 1e-3, 1.0);
  const double h = 1.0 / 64;
  const double k2 = (2.0 - 2.0 * std::cos(two_pi * h)) / (h * h);
  CHECK(traj.states.back().torus().u(16, 0) == doctest::Approx(eps * std::exp(-k2 * t)).epsilon(1e-5));
}

TEST_CASE("evolve: spatial convergence at second order") {
  const double t = 0.01;
  auto u_at = [&](int N) { return evolve(test::sinx(N, 0.2), t, 1e-3, 1.0).states.back().torus().u; };
  const ScalarField u32 = u_at(32), u64 = u_at(64), u128 = u_at(128);
  double e1 = 0.0, e2 = 0.0;
  for (int i = 0; i < 32; ++i) {
    e1 = std::max(e1, std::abs(u32(i, 0) - u128(4 * i, 0)));
    e2 = std::max(e2, std::abs(u64(2 * i, 0) - u128(4 * i, 0)));
  }
  // Richardson: (e_32 - e_64 differences) shrink by 4 under halving; e1/e2 = (16-1)/(4-1) = 5.
  CHECK(e1 / e2 == doctest::Approx(5.0).epsilon(0.1));
}

TEST_CASE("trajectory ladder helpers") {
  const FlowTrajectory traj = evolve(make_sphere(2, 1.0), 0.01, 1e-3, 0.5);
  CHECK(traj.index_of(0.005) == 5);
  CHECK_THROWS_AS(traj.index_of(0.0055), PreconditionError);
  CHECK(traj.nearest_index(0.0056) == 6);
  CHECK(traj.nearest_index(1.0) == traj.size() - 1);
  CHECK(traj.tau(0) == 0.5);
  const double r2 = std::pow(traj.state_at(0.0055).sphere().r, 2);
  CHECK(r2 == doctest::Approx(1.0 - 0.011).epsilon(1e-14));
  CHECK(traj.prefix(3).size() == 3);
}

TEST_CASE("cfl_bound") {
  CHECK(cfl_bound(test::flat(10)) == doctest::Approx(0.2 * 0.01));
  CHECK(std::isinf(cfl_bound(make_sphere(2, 1.0))));
}
