#include "rel/flow.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "rel/curvature.hpp"
#include "rel/errors.hpp"
#include "rel/format.hpp"
#include "rel/stencil.hpp"

namespace rel {

namespace {

// u_t = e^{-2u} Lap0 u
ScalarField torus_rate(const TorusMetric& t) {
  ScalarField rate = stencil::laplacian(t.u, t.grid);
  for (std::size_t k = 0; k < rate.size(); ++k) rate[k] *= std::exp(-2.0 * t.u[k]);
  return rate;
}

TorusMetric midpoint_step(const TorusMetric& t, double dt) {
  TorusMetric mid{t.grid, t.u + (0.5 * dt) * torus_rate(t)};
  return TorusMetric{t.grid, t.u + dt * torus_rate(mid)};
}

constexpr double kLadderSlack = 1e-9;

}  // namespace

std::size_t FlowTrajectory::index_of(double t) const {
  const double s = (t - t0) / dt;
  const double k = std::round(s);
  if (std::abs(s - k) > kLadderSlack || k < 0 || k >= static_cast<double>(states.size())) {
    throw PreconditionError("FlowTrajectory: time " + format_double(t) + " is not a stored ladder point");
  }
  return static_cast<std::size_t>(k);
}

std::size_t FlowTrajectory::nearest_index(double t) const {
  const double s = std::round((t - t0) / dt);
  if (s <= 0) return 0;
  return std::min(static_cast<std::size_t>(s), states.size() - 1);
}

MetricState FlowTrajectory::state_at(double t) const {
  require(!states.empty(), "FlowTrajectory: empty trajectory");
  const double s = (t - t0) / dt;
  const double last = static_cast<double>(states.size() - 1);
  require(s >= -kLadderSlack && s <= last + kLadderSlack, "FlowTrajectory: time outside the trajectory");
  const double k = std::round(s);
  if (std::abs(s - k) <= kLadderSlack) return states[static_cast<std::size_t>(k)];

  const auto lo = static_cast<std::size_t>(std::floor(s));
  const double theta = s - static_cast<double>(lo);
  const MetricState& a = states[lo];
  const MetricState& b = states[lo + 1];
  if (a.is_sphere()) {
    const double r2 = (1.0 - theta) * a.sphere().r * a.sphere().r + theta * b.sphere().r * b.sphere().r;
    return make_sphere(a.sphere().n, std::sqrt(r2));
  }
  ScalarField u = (1.0 - theta) * a.torus().u + theta * b.torus().u;
  return MetricState(TorusMetric{a.torus().grid, std::move(u)});
}

FlowTrajectory FlowTrajectory::prefix(std::size_t count) const {
  require(count >= 1 && count <= states.size(), "FlowTrajectory::prefix: bad count");
  FlowTrajectory out{std::vector<MetricState>(states.begin(), states.begin() + static_cast<long>(count)), t0, dt,
                     t0_prime};
  return out;
}

double cfl_bound(const MetricState& g) {
  if (g.is_sphere()) return std::numeric_limits<double>::infinity();
  const auto& t = g.torus();
  const double h = std::min(t.grid.h1(), t.grid.h2());
  return 0.2 * h * h * std::exp(2.0 * t.u.min());
}

double sphere_extinction_time(int n, double r0) { return r0 * r0 / (2.0 * (n - 1)); }

MetricState ricci_step(const MetricState& g, double dt) {
  require(std::isfinite(dt) && dt > 0.0, "ricci_step: dt must be positive");
  if (g.is_sphere()) {
    const auto& s = g.sphere();
    const double r2 = s.r * s.r - 2.0 * (s.n - 1) * dt;
    require(r2 > 0.0, "ricci_step: sphere extinction reached");
    return make_sphere(s.n, std::sqrt(r2));
  }
  const double bound = cfl_bound(g);
  if (dt > bound) {
    throw PreconditionError("ricci_step: dt " + format_double(dt) + " exceeds the stability bound " +
                            format_double(bound));
  }
  TorusMetric next = midpoint_step(g.torus(), dt);
  if (!next.u.all_finite()) throw InvariantViolation("ricci_step: conformal factor became non-finite");
  return MetricState(std::move(next));
}

MetricState sphere_exact(int n, double r0, double t) {
  require(n >= 2 && r0 > 0.0, "sphere_exact: invalid sphere");
  const double r2 = r0 * r0 - 2.0 * (n - 1) * t;
  require(r2 > 0.0, "sphere_exact: extinction time reached");
  return make_sphere(n, std::sqrt(r2));
}

FlowTrajectory evolve(const MetricState& g0, double t_end, double dt, double t0_prime) {
  require(std::isfinite(dt) && dt > 0.0, "evolve: dt must be positive");
  require(std::isfinite(t_end) && t_end >= 0.0, "evolve: t_end must be nonnegative");
  const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt - kLadderSlack));
  const double t_last = static_cast<double>(steps) * dt;
  require(t_last < t0_prime, "evolve: tau = t0_prime - t must stay positive");

  FlowTrajectory traj;
  traj.t0 = 0.0;
  traj.dt = dt;
  traj.t0_prime = t0_prime;
  traj.states.reserve(steps + 1);
  traj.states.push_back(g0);

  if (g0.is_sphere()) {
    const auto& s = g0.sphere();
    require(t_last < sphere_extinction_time(s.n, s.r), "evolve: run reaches sphere extinction");
    for (std::size_t k = 1; k <= steps; ++k) {
      traj.states.push_back(sphere_exact(s.n, s.r, static_cast<double>(k) * dt));
    }
    return traj;
  }

  int substeps = 1;
  for (std::size_t k = 1; k <= steps; ++k) {
    const MetricState& start = traj.states.back();
    while (dt / substeps > cfl_bound(start)) substeps *= 2;
    // The bound can tighten inside the interval; redo it with a finer step.
    while (true) {
      MetricState g = start;
      const double h = dt / substeps;
      bool stable = true;
      for (int s = 0; s < substeps; ++s) {
        if (h > cfl_bound(g)) {
          stable = false;
          break;
        }
        g = ricci_step(g, h);
      }
      if (stable) {
        traj.states.push_back(std::move(g));
        break;
      }
      substeps *= 2;
    }
  }
  return traj;
}

void write_trajectory_csv(const FlowTrajectory& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "step,t,tau,vol,Rmin,Rmax\n";
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const ScalarField R = scalar_curvature(traj[k]);
    out << k << ',' << format_double(traj.time(k)) << ',' << format_double(traj.tau(k)) << ','
        << format_double(total_volume(traj[k])) << ',' << format_double(R.min()) << ','
        << format_double(R.max()) << '\n';
  }
}

void write_grid_csv(const ScalarField& field, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  for (int i = 0; i < field.rows(); ++i) {
    for (int j = 0; j < field.cols(); ++j) {
      if (j) out << ',';
      out << format_double(field(i, j));
    }
    out << '\n';
  }
}

}  // namespace rel
