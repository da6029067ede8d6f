#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "rel/curvature.hpp"
#include "rel/diffeo.hpp"
#include "rel/entropy.hpp"
#include "rel/errors.hpp"
#include "rel/flow.hpp"
#include "support.hpp"

using namespace rel;
using test::pi;
using test::two_pi;

namespace {

// A trajectory that is stationary in time, paired with a time-independent f.
struct Stationary {
  FlowTrajectory traj;
  std::vector<ScalarField> f;
};

Stationary stationary(int N, double t_end, double dt, const test::Fn2& fn) {
  Stationary s;
  s.traj = evolve(test::flat(N), t_end, dt, 1.0);
  const ScalarField f = test::sample(s.traj[0].torus().grid, fn);
  s.f.assign(s.traj.size(), f);
  return s;
}

double f_cos(double x, double) { return std::cos(two_pi * x) / two_pi; }

// Exact flow of x' = sin(2 pi x): tan(pi x(s)) = tan(pi x0) e^{2 pi s}.
double sin_flow(double x0, double s) { return std::atan(std::tan(pi * x0) * std::exp(two_pi * s)) / pi; }

}  // namespace

TEST_CASE("constant f gives the identity map") {
  const Stationary s = stationary(16, 0.01, 1e-3, [](double, double) { return 1.7; });
  const GradientHistory hist(s.traj, s.f);
  const DiffeoMap phi = integrate_flow(hist, 0.0, 0.01, 1e-3);
  CHECK(phi.dx.max_abs() == 0.0);
  CHECK(phi.dy.max_abs() == 0.0);
  const DiffeoMap psi = integrate_frozen_flow(hist, 0.005, 0.3, 1e-2);
  CHECK(psi.dx.max_abs() == 0.0);
  CHECK(pullback_metric(phi, s.traj[0]).t11() == metric_tensor(s.traj[0]).t11());
}

TEST_CASE("frozen flow matches the separable one-dimensional ODE") {
  // f = cos(2 pi x)/(2 pi) gives V = -grad f = (sin(2 pi x), 0).
  const Stationary s = stationary(128, 0.01, 1e-3, f_cos);
  const GradientHistory hist(s.traj, s.f);
  for (double x0 : {0.1, 0.3, 0.45, 0.8}) {
    const Point p = integrate_point_frozen(hist, {x0, 0.2}, 0.0, 0.1, 1e-3);
    // Interpolated velocity is O(h^2) accurate and the centered gradient of f is O(h^2) too.
    const double exact = x0 < 0.5 ? sin_flow(x0, 0.1) : sin_flow(x0 - 1.0, 0.1) + 1.0;
    CHECK(p[0] == doctest::Approx(exact).epsilon(1e-4));
    CHECK(p[1] == 0.2);
  }
}

TEST_CASE("frozen flow composes") {
  const Stationary s = stationary(64, 0.01, 1e-3, [](double x, double y) {
    return 0.1 * std::cos(two_pi * x) * std::sin(two_pi * y);
  });
  const GradientHistory hist(s.traj, s.f);
  const Point p{0.31, 0.77};
  const Point a = integrate_point_frozen(hist, p, 0.0, 0.3, 1e-3);
  const Point b = integrate_point_frozen(hist, integrate_point_frozen(hist, p, 0.0, 0.1, 1e-3), 0.0, 0.2, 1e-3);
  CHECK(std::abs(a[0] - b[0]) < 1e-12);
  CHECK(std::abs(a[1] - b[1]) < 1e-12);
}

TEST_CASE("time-independent f: both flows coincide") {
  const Stationary s = stationary(32, 0.02, 1e-3, f_cos);
  const GradientHistory hist(s.traj, s.f);
  const DiffeoMap phi = integrate_flow(hist, 0.005, 0.015, 1e-3);
  const DiffeoMap psi = integrate_frozen_flow(hist, 0.005, 0.01, 1e-3);
  CHECK(test::max_diff(phi.dx, psi.dx) < 1e-15);
  const DeviationStudy study = lemma13_orders(s.traj, s.f, 0.01, 5, 7, {4e-3, 2e-3, 1e-3});
  for (const auto& r : study.records) CHECK(r.e_norm < 1e-15);
  CHECK_FALSE(study.slope_e.has_value());
}

TEST_CASE("time-dependent f on a flat trajectory: first-order deviation") {
  Stationary s = stationary(32, 0.04, 1e-3, f_cos);
  const auto& grid = s.traj[0].torus().grid;
  for (std::size_t k = 0; k < s.traj.size(); ++k) {
    const double t = s.traj.time(k);
    s.f[k] = test::sample(grid, [t](double x, double y) {
      return std::cos(two_pi * x) / two_pi * (1.0 + 10.0 * t) + 0.05 * std::sin(two_pi * y) * std::sin(20.0 * t);
    });
  }
  const DeviationStudy study = lemma13_orders(s.traj, s.f, 0.02, 3, 5, {1e-2, 3e-3, 1e-3, 3e-4, 1e-4});
  REQUIRE(study.slope_e.has_value());
  CHECK(*study.slope_e >= 1.0);
  // e/h and E/h^2 stay bounded: their spread over two decades of h is small.
  double e_lo = 1e300, e_hi = 0.0, E_lo = 1e300, E_hi = 0.0;
  for (const auto& r : study.records) {
    e_lo = std::min(e_lo, r.e_norm / r.h);
    e_hi = std::max(e_hi, r.e_norm / r.h);
    E_lo = std::min(E_lo, r.E_val / (r.h * r.h));
    E_hi = std::max(E_hi, r.E_val / (r.h * r.h));
  }
  CHECK(e_hi < 1.0);
  CHECK(E_hi / E_lo < 1.5);
}

TEST_CASE("pullback by the identity and by translations") {
  const MetricState g = test::sinx(32, 0.1);
  const auto& grid = g.torus().grid;
  DiffeoMap id{grid, grid.zeros(), grid.zeros(), 0.0, 0.0};
  const SymTensorField T = metric_tensor(g);
  const SymTensorField P = pullback_tensor(id, T);
  CHECK(P.t11() == T.t11());
  CHECK(P.t22() == T.t22());
  CHECK(P.t12().max_abs() == 0.0);

  const MetricState flat = test::flat(32);
  DiffeoMap shift{grid, grid.zeros() + 0.123, grid.zeros() + 0.456, 0.0, 0.0};
  const SymTensorField Q = pullback_metric(shift, flat);
  CHECK(test::max_diff(Q.t11(), flat.constant_field(1.0)) < 1e-14);
  CHECK(Q.t12().max_abs() < 1e-14);
  CHECK(test::max_diff(Q.t22(), flat.constant_field(1.0)) < 1e-14);
}

TEST_CASE("pullback by an analytic shear") {
  // phi(x, y) = (x + a sin 2 pi y, y + b sin 2 pi x), T = e^{2u} delta with u = eps sin 2 pi x.
  const double a = 0.03, b = 0.05, eps = 0.1;
  auto err = [&](int N) {
    const MetricState g = test::sinx(N, eps);
    const auto& grid = g.torus().grid;
    DiffeoMap phi{grid, test::sample(grid, [&](double, double y) { return a * std::sin(two_pi * y); }),
                  test::sample(grid, [&](double x, double) { return b * std::sin(two_pi * x); }), 0.0, 0.0};
    const SymTensorField P = pullback_metric(phi, g);
    double e = 0.0;
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) {
        const double x = grid.x(i), y = grid.y(j);
        const double X = x + a * std::sin(two_pi * y);
        const double w = std::exp(2 * eps * std::sin(two_pi * X));
        const double J11 = 1, J12 = a * two_pi * std::cos(two_pi * y), J21 = b * two_pi * std::cos(two_pi * x), J22 = 1;
        e = std::max({e, std::abs(P.t11()(i, j) - w * (J11 * J11 + J21 * J21)),
                      std::abs(P.t12()(i, j) - w * (J11 * J12 + J21 * J22)),
                      std::abs(P.t22()(i, j) - w * (J12 * J12 + J22 * J22))});
      }
    return e;
  };
  const double e1 = err(32), e2 = err(64);
  CHECK(e2 < 2e-3);
  CHECK(e1 / e2 > 3.0);
}

TEST_CASE("W is invariant under the gradient flow map") {
  // W(phi^* g, f o phi, tau) against W(g, f, tau); phi^* g is a general metric,
  // evaluated by an independent curvature oracle. Both the oracle's own
  // discretization error and the invariance gap must shrink at second order.
  struct Gaps {
    double oracle, mapped;
  };
  auto gaps = [](int N) {
    const double eps = 0.1, tau = 0.5;
    auto u = [eps](double x, double y) { return eps * std::sin(two_pi * x) * std::cos(two_pi * y); };
    auto f = [](double x, double y) { return 0.3 * std::cos(two_pi * x) + 0.2 * std::sin(two_pi * (x + y)); };
    const MetricState g = test::torus(N, u);
    const auto& grid = g.torus().grid;
    const FlowTrajectory traj = evolve(g, 0.0, 1e-3, 1.0);
    const ScalarField fg = test::sample(grid, f);
    const DiffeoMap phi = integrate_frozen_flow(traj, {fg}, 0.0, 0.05, 1e-3);
    const auto J = phi.jacobian();
    test::GeneralMetric m{grid, grid.zeros(), grid.zeros(), grid.zeros()};
    ScalarField fphi = grid.zeros();
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) {
        const Point q = phi.image(i, j);
        const double w = std::exp(2 * u(q[0], q[1]));
        const double a = J[0](i, j), b = J[1](i, j), c = J[2](i, j), d = J[3](i, j);
        m.E(i, j) = w * (a * a + c * c);
        m.F(i, j) = w * (a * b + c * d);
        m.G(i, j) = w * (b * b + d * d);
        fphi(i, j) = f(q[0], q[1]);
      }
    const double ref = W_functional(g, fg, tau);
    const test::GeneralMetric m0{grid, metric_tensor(g).t11(), grid.zeros(), metric_tensor(g).t22()};
    return Gaps{std::abs(test::general_W(m0, fg, tau) - ref), std::abs(test::general_W(m, fphi, tau) - ref)};
  };
  const Gaps coarse = gaps(32), fine = gaps(64);
  CHECK(fine.oracle < 1e-3);
  CHECK(coarse.oracle / fine.oracle > 3.5);
  CHECK(fine.mapped < 1e-2);
  CHECK(coarse.mapped / fine.mapped > 3.5);
}

TEST_CASE("flow maps on the perturbed torus are invertible local diffeomorphisms") {
  const FlowTrajectory traj = evolve(test::sinx(32, 0.1), 0.02, 1e-4, 0.1);
  const auto& grid = traj[0].torus().grid;
  std::vector<ScalarField> f;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double t = traj.time(k);
    f.push_back(test::sample(grid, [t](double x, double y) { return std::sin(two_pi * (x + y)) * (1.0 + 5 * t); }));
  }
  const GradientHistory hist(traj, f);
  CHECK(inverse_defect(hist, 0.0, 0.02, 1e-3) < 1e-6);
  const DiffeoMap phi = integrate_flow(hist, 0.0, 0.02, 1e-3);
  CHECK(phi.min_jacobian_det() > 0.0);
  CHECK(phi.dx.all_finite());
  const DiffeoMap same = integrate_flow(hist, 0.01, 0.01, 1e-3);
  CHECK(same.dx.max_abs() == 0.0);
  CHECK(same.dy.max_abs() == 0.0);
}

TEST_CASE("Lie derivative identity: constant f and stationary flat trajectories") {
  const Stationary c = stationary(16, 0.02, 1e-3, [](double, double) { return 0.4; });
  CHECK(lemma14_residual(c.traj, c.f, 0.0, 0.01, 1e-3) < 1e-14);

  auto residual = [](int N, double dt) {
    const Stationary s = stationary(N, 0.02, dt, [](double x, double y) {
      return 0.05 * std::cos(two_pi * x) * std::cos(two_pi * y);
    });
    return lemma14_residual(s.traj, s.f, 0.0, 0.01, dt);
  };
  const double r1 = residual(16, 2e-3), r2 = residual(32, 1e-3);
  CHECK(r2 < r1 / 3.0);
}

TEST_CASE("GradientHistory rejects mismatched inputs") {
  const FlowTrajectory traj = evolve(test::flat(8), 0.002, 1e-3, 1.0);
  CHECK_THROWS_AS(GradientHistory(traj, {traj[0].constant_field(0.0)}), PreconditionError);
  const FlowTrajectory sphere = evolve(make_sphere(2, 1.0), 0.002, 1e-3, 1.0);
  CHECK_THROWS_AS(GradientHistory(sphere, {ScalarField::constant(0), ScalarField::constant(0), ScalarField::constant(0)}),
                  PreconditionError);
}
