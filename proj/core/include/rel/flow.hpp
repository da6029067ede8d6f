#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "rel/manifold.hpp"

namespace rel {

/// Metrics g(t_k) on the uniform ladder t_k = t0 + k*dt, plus the backward
/// time tau(t) = t0_prime - t.
struct FlowTrajectory {
  std::vector<MetricState> states;
  double t0 = 0.0;
  double dt = 0.0;
  double t0_prime = 0.0;

  std::size_t size() const noexcept { return states.size(); }
  double time(std::size_t k) const noexcept { return t0 + static_cast<double>(k) * dt; }
  double tau(std::size_t k) const noexcept { return t0_prime - time(k); }
  double final_time() const noexcept { return time(states.size() - 1); }
  const MetricState& operator[](std::size_t k) const { return states[k]; }

  /// Index of the ladder point at time t; throws if t is not on the ladder.
  std::size_t index_of(double t) const;
  /// Ladder index closest to t, clamped to the stored range.
  std::size_t nearest_index(double t) const;
  /// Metric at time t. Between ladder points the conformal factor (torus) or
  /// r^2 (sphere) is interpolated linearly in t.
  MetricState state_at(double t) const;
  /// The first `count` states.
  FlowTrajectory prefix(std::size_t count) const;
};

/// Largest admissible explicit step: 0.2 * min(h1,h2)^2 * min e^{2u}.
/// Infinite for the sphere.
double cfl_bound(const MetricState& g);

/// First time at which the round sphere of radius r0 collapses.
double sphere_extinction_time(int n, double r0);

/// One step of the Ricci flow. Torus: explicit midpoint step of
/// u_t = e^{-2u} Lap0 u. Sphere: exact r^2 <- r^2 - 2(n-1) dt.
MetricState ricci_step(const MetricState& g, double dt);

/// Evolves g0 from t = 0 to t_end, storing ceil(t_end/dt)+1 states on the
/// ladder. Torus steps are subdivided by powers of two whenever the CFL
/// bound requires it, so stored states always land on the ladder.
FlowTrajectory evolve(const MetricState& g0, double t_end, double dt, double t0_prime);

/// Sphere(n, sqrt(r0^2 - 2(n-1) t)).
MetricState sphere_exact(int n, double r0, double t);

/// CSV with columns step,t,tau,vol,Rmin,Rmax.
void write_trajectory_csv(const FlowTrajectory& traj, const std::string& path);

/// Writes a torus conformal factor as an N1 x N2 CSV grid.
void write_grid_csv(const ScalarField& field, const std::string& path);

}  // namespace rel
