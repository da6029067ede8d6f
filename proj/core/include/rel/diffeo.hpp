#pragma once

#include <array>
#include <optional>
#include <utility>
#include <vector>

#include "rel/flow.hpp"
#include "rel/manifold.hpp"

namespace rel {

using Point = std::array<double, 2>;
/// Row-major 2x2 matrix {a11, a12, a21, a22}.
using Mat2 = std::array<double, 4>;

/// The velocity field V = -grad f = -e^{-2u} (f_x, f_y) at every stored time
/// of a torus trajectory, sampled in space by periodic bicubic interpolation
/// and linearly in time between stored slices.
class GradientHistory {
 public:
  GradientHistory(const FlowTrajectory& traj, const std::vector<ScalarField>& f);

  Point velocity(const Point& p, double t) const;
  /// Velocity and its spatial Jacobian dV/dx.
  std::pair<Point, Mat2> velocity_jacobian(const Point& p, double t) const;

  const TorusGrid& grid() const noexcept { return grid_; }
  double t_begin() const noexcept { return t0_; }
  double t_end() const noexcept { return t0_ + dt_ * static_cast<double>(vx_.size() - 1); }

 private:
  // Slice index and weight of the later slice; weight 0 on ladder points.
  std::pair<std::size_t, double> locate(double t) const;

  TorusGrid grid_;
  double t0_ = 0.0;
  double dt_ = 0.0;
  std::vector<ScalarField> vx_, vy_;
};

/// phi_{t0,t1}(p): RK4 for dx/dt = V(x, t), with ceil(|t1-t0|/dt) equal steps.
/// Integrates backward when t1 < t0.
Point integrate_point(const GradientHistory& hist, const Point& p, double t0, double t1, double dt);

/// psi_s^t(p): RK4 for the autonomous field V(., t) up to s_end.
Point integrate_point_frozen(const GradientHistory& hist, const Point& p, double t, double s_end, double ds);

/// A map of the torus into its universal cover, stored as node displacements.
struct DiffeoMap {
  TorusGrid grid;
  ScalarField dx;
  ScalarField dy;
  double t_source = 0.0;
  double t_target = 0.0;

  Point image(int i, int j) const { return {grid.x(i) + dx(i, j), grid.y(j) + dy(i, j)}; }
  /// Jacobian I + grad(displacement), centered differences; {J11, J12, J21, J22}.
  std::array<ScalarField, 4> jacobian() const;
  double min_jacobian_det() const;
};

DiffeoMap integrate_flow(const GradientHistory& hist, double t0, double t_end, double dt);
DiffeoMap integrate_flow(const FlowTrajectory& traj, const std::vector<ScalarField>& f, double t0, double t_end,
                         double dt);

DiffeoMap integrate_frozen_flow(const GradientHistory& hist, double t, double s_end, double ds);
DiffeoMap integrate_frozen_flow(const FlowTrajectory& traj, const std::vector<ScalarField>& f, double t,
                                double s_end, double ds);

/// (map^* T)_ij(p) = J^a_i J^b_j T_ab(map(p)), T sampled by bicubic interpolation.
SymTensorField pullback_tensor(const DiffeoMap& map, const SymTensorField& T);

/// map^* g for a torus metric g on the map's grid.
SymTensorField pullback_metric(const DiffeoMap& map, const MetricState& g);

struct DeviationRecord {
  double h = 0.0;
  /// |phi_{t,t+h}(p) - psi_h^t(p)|
  double e_norm = 0.0;
  /// Largest entry of g(t)(dphi ., dphi .) - g(t)(dpsi ., dpsi .) on coordinate vectors.
  double E_val = 0.0;
  /// |de/dh|, the velocity mismatch at the two endpoints.
  double de_dh = 0.0;
  /// Largest entry of d e / d x.
  double de_dx = 0.0;
};

struct DeviationStudy {
  std::vector<DeviationRecord> records;
  /// Least-squares slopes of log e_norm and log E_val against log h; absent
  /// when some value is exactly zero.
  std::optional<double> slope_e;
  std::optional<double> slope_E;
};

/// Compares the time-dependent and frozen flows from node (i, j) at time t
/// over each h in h_list (at least three values), each with `substeps` RK4 steps.
DeviationStudy lemma13_orders(const FlowTrajectory& traj, const std::vector<ScalarField>& f, double t, int i, int j,
                              const std::vector<double>& h_list, int substeps = 16);

/// Max-norm of (gbar(t+dt) - gbar(t-dt))/(2 dt) - phi_{t0,t}^*(-R g - 2 Hess f) at time t,
/// where gbar(s) = phi_{t0,s}^* g(s). t and t +- dt must be stored times; maps
/// are integrated with `substeps` RK4 steps per ladder interval.
double lemma14_residual(const FlowTrajectory& traj, const std::vector<ScalarField>& f, double t0, double t, double dt,
                        int substeps = 2);

/// max over nodes p of |phi_{t1,t0}(phi_{t0,t1}(p)) - p|.
double inverse_defect(const GradientHistory& hist, double t0, double t1, double dt);

}  // namespace rel
