#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "rel/flow.hpp"
#include "rel/manifold.hpp"

namespace rel {

/// Solution of H_t = -Lap_{g(t)} H + R(g(t)) H backward from H(t1) = H_final,
/// aligned index-by-index with the trajectory it was solved on (t1 is the
/// trajectory's final time).
struct ConjugateSolution {
  std::vector<ScalarField> H;
  /// f = -log[(4 pi tau)^{n/2} H] at every stored time.
  std::vector<ScalarField> f;
  /// sup |R| over the stored states, the decay rate of the positivity floor.
  double C2 = 0.0;
  double t1 = 0.0;
};

/// Marches s = t1 - t forward: H_s = Lap H - R H. On each ladder interval the
/// metric is frozen at the interval's later time and the step is subdivided
/// by powers of two until both the flow CFL bound and |R| ds <= 0.1 hold.
/// Each substep is a two-stage Heun step.
/// The sphere is integrated exactly: H(t) = H(t1) (r(t1)/r(t))^n.
///
/// Throws InvariantViolation if H falls below the positivity floor by more
/// than `floor_tol`.
ConjugateSolution solve_conjugate_heat(const FlowTrajectory& traj, const ScalarField& H_final,
                                       double floor_tol = 1e-8);

struct PositivityReport {
  double C2 = 0.0;
  double min_H0 = 0.0;
  std::vector<double> floor;   // e^{-C2 (t1 - t_k)} min H0
  std::vector<double> margin;  // min H(t_k) - floor_k
  double min_margin = 0.0;
  bool pass = false;
};

/// Checks H(x,t) >= e^{-C2 (t1-t)} min H0 - tol at every stored time.
PositivityReport positivity_floor(const ConjugateSolution& sol, const FlowTrajectory& traj, double tol = 1e-8);

/// f = -log[(4 pi tau)^{n/2} H] for every stored time.
std::vector<ScalarField> H_to_f(const ConjugateSolution& sol, const FlowTrajectory& traj);

/// Inverse transform H = (4 pi tau)^{-n/2} e^{-f}.
ScalarField f_to_H(const ScalarField& f, double tau, int n);

/// Integral of H(t_k) dV_{g(t_k)}.
double mass(const ConjugateSolution& sol, const FlowTrajectory& traj, std::size_t index);

/// (4 pi tau)^{-n/2} * integral of e^{-f} dV.
double constraint_value(const ScalarField& f, const MetricState& g, double tau);

/// CSV with columns t,mass,constraint.
void write_mass_csv(const ConjugateSolution& sol, const FlowTrajectory& traj, const std::string& path);

}  // namespace rel
