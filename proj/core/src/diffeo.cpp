#include "rel/diffeo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rel/curvature.hpp"
#include "rel/errors.hpp"
#include "rel/interp.hpp"
#include "rel/stencil.hpp"

namespace rel {

namespace {

constexpr double kSliceSnap = 1e-9;

Point axpy(const Point& p, double a, const Point& v) { return {p[0] + a * v[0], p[1] + a * v[1]}; }

Mat2 mat_axpy(const Mat2& A, double a, const Mat2& B) {
  return {A[0] + a * B[0], A[1] + a * B[1], A[2] + a * B[2], A[3] + a * B[3]};
}

Mat2 mat_mul(const Mat2& A, const Mat2& B) {
  return {A[0] * B[0] + A[1] * B[2], A[0] * B[1] + A[1] * B[3], A[2] * B[0] + A[3] * B[2],
          A[2] * B[1] + A[3] * B[3]};
}

int step_count(double span, double dt) {
  require(std::isfinite(dt) && dt > 0.0, "diffeo: ODE step must be positive");
  return std::max(1, static_cast<int>(std::ceil(std::abs(span) / dt - 1e-9)));
}

// One RK4 step of the point and its tangent map, with velocity evaluated by `vel(p, s)`.
template <class Vel>
void rk4_step(const Vel& vel, Point& x, Mat2& J, double s, double h) {
  const auto [k1, A1] = vel(x, s);
  const auto [k2, A2] = vel(axpy(x, 0.5 * h, k1), s + 0.5 * h);
  const auto [k3, A3] = vel(axpy(x, 0.5 * h, k2), s + 0.5 * h);
  const auto [k4, A4] = vel(axpy(x, h, k3), s + h);
  const Mat2 L1 = mat_mul(A1, J);
  const Mat2 L2 = mat_mul(A2, mat_axpy(J, 0.5 * h, L1));
  const Mat2 L3 = mat_mul(A3, mat_axpy(J, 0.5 * h, L2));
  const Mat2 L4 = mat_mul(A4, mat_axpy(J, h, L3));
  for (int c = 0; c < 2; ++c) x[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
  for (int c = 0; c < 4; ++c) J[c] += h / 6.0 * (L1[c] + 2.0 * L2[c] + 2.0 * L3[c] + L4[c]);
}

template <class Vel>
Point rk4_point(const Vel& vel, Point x, double s0, double s1, double dt) {
  const int n = step_count(s1 - s0, dt);
  const double h = (s1 - s0) / n;
  for (int k = 0; k < n; ++k) {
    const double s = s0 + k * h;
    const Point k1 = vel(x, s);
    const Point k2 = vel(axpy(x, 0.5 * h, k1), s + 0.5 * h);
    const Point k3 = vel(axpy(x, 0.5 * h, k2), s + 0.5 * h);
    const Point k4 = vel(axpy(x, h, k3), s + h);
    for (int c = 0; c < 2; ++c) x[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
  }
  if (!std::isfinite(x[0]) || !std::isfinite(x[1])) throw InvariantViolation("diffeo: flow map became non-finite");
  return x;
}

template <class Vel>
std::pair<Point, Mat2> rk4_tangent(const Vel& vel, Point x, double s0, double s1, int steps) {
  Mat2 J{1.0, 0.0, 0.0, 1.0};
  const double h = (s1 - s0) / steps;
  for (int k = 0; k < steps; ++k) rk4_step(vel, x, J, s0 + k * h, h);
  return {x, J};
}

template <class MapPoint>
DiffeoMap map_nodes(const TorusGrid& grid, double t_source, double t_target, MapPoint&& map_point) {
  DiffeoMap m{grid, grid.zeros(), grid.zeros(), t_source, t_target};
  for (int i = 0; i < grid.N1; ++i) {
    for (int j = 0; j < grid.N2; ++j) {
      const Point q = map_point(Point{grid.x(i), grid.y(j)});
      m.dx(i, j) = q[0] - grid.x(i);
      m.dy(i, j) = q[1] - grid.y(j);
    }
  }
  return m;
}

ScalarField conformal_factor(const MetricState& g) {
  return g.torus().u.map([](double u) { return std::exp(2.0 * u); });
}

std::optional<double> loglog_slope(const std::vector<double>& h, const std::vector<double>& v) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < h.size(); ++k) {
    if (!(v[k] > 0.0)) return std::nullopt;
    const double x = std::log(h[k]), y = std::log(v[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(h.size());
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double max_abs_diff(const SymTensorField& a, const SymTensorField& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.t11().size(); ++k) {
    m = std::max({m, std::abs(a.t11()[k] - b.t11()[k]), std::abs(a.t12()[k] - b.t12()[k]),
                  std::abs(a.t22()[k] - b.t22()[k])});
  }
  return m;
}

}  // namespace

GradientHistory::GradientHistory(const FlowTrajectory& traj, const std::vector<ScalarField>& f)
    : t0_(traj.t0), dt_(traj.dt) {
  require(traj.size() >= 1 && f.size() == traj.size(), "GradientHistory: f must be aligned with the trajectory");
  require(traj[0].is_torus(), "GradientHistory: flow maps are defined on the torus only");
  grid_ = traj[0].torus().grid;
  vx_.reserve(f.size());
  vy_.reserve(f.size());
  for (std::size_t k = 0; k < f.size(); ++k) {
    const auto& t = traj[k].torus();
    traj[k].check_shape(f[k], "GradientHistory");
    const ScalarField scale = t.u.map([](double u) { return -std::exp(-2.0 * u); });
    vx_.push_back(scale * stencil::dx(f[k], grid_));
    vy_.push_back(scale * stencil::dy(f[k], grid_));
  }
}

std::pair<std::size_t, double> GradientHistory::locate(double t) const {
  const double last = static_cast<double>(vx_.size() - 1);
  const double s = vx_.size() == 1 ? 0.0 : (t - t0_) / dt_;
  require(s >= -kSliceSnap && s <= last + kSliceSnap, "GradientHistory: time outside the stored range");
  const double k = std::round(s);
  if (std::abs(s - k) <= kSliceSnap) return {static_cast<std::size_t>(k), 0.0};
  const double lo = std::floor(s);
  return {static_cast<std::size_t>(lo), s - lo};
}

Point GradientHistory::velocity(const Point& p, double t) const {
  const auto [k, w] = locate(t);
  const Point a{sample_periodic(vx_[k], grid_, p[0], p[1]), sample_periodic(vy_[k], grid_, p[0], p[1])};
  if (w == 0.0) return a;
  const Point b{sample_periodic(vx_[k + 1], grid_, p[0], p[1]), sample_periodic(vy_[k + 1], grid_, p[0], p[1])};
  return {a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])};
}

std::pair<Point, Mat2> GradientHistory::velocity_jacobian(const Point& p, double t) const {
  const auto [k, w] = locate(t);
  auto at = [&](std::size_t s) {
    const auto x = sample_periodic_grad(vx_[s], grid_, p[0], p[1]);
    const auto y = sample_periodic_grad(vy_[s], grid_, p[0], p[1]);
    return std::pair<Point, Mat2>{{x.value, y.value}, {x.dx, x.dy, y.dx, y.dy}};
  };
  auto a = at(k);
  if (w == 0.0) return a;
  const auto b = at(k + 1);
  for (int c = 0; c < 2; ++c) a.first[c] += w * (b.first[c] - a.first[c]);
  for (int c = 0; c < 4; ++c) a.second[c] += w * (b.second[c] - a.second[c]);
  return a;
}

Point integrate_point(const GradientHistory& hist, const Point& p, double t0, double t1, double dt) {
  return rk4_point([&](const Point& x, double s) { return hist.velocity(x, s); }, p, t0, t1, dt);
}

Point integrate_point_frozen(const GradientHistory& hist, const Point& p, double t, double s_end, double ds) {
  return rk4_point([&](const Point& x, double) { return hist.velocity(x, t); }, p, 0.0, s_end, ds);
}

std::array<ScalarField, 4> DiffeoMap::jacobian() const {
  return {stencil::dx(dx, grid) + 1.0, stencil::dy(dx, grid), stencil::dx(dy, grid), stencil::dy(dy, grid) + 1.0};
}

double DiffeoMap::min_jacobian_det() const {
  const auto J = jacobian();
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < J[0].size(); ++k) m = std::min(m, J[0][k] * J[3][k] - J[1][k] * J[2][k]);
  return m;
}

DiffeoMap integrate_flow(const GradientHistory& hist, double t0, double t_end, double dt) {
  return map_nodes(hist.grid(), t0, t_end, [&](const Point& p) { return integrate_point(hist, p, t0, t_end, dt); });
}

DiffeoMap integrate_flow(const FlowTrajectory& traj, const std::vector<ScalarField>& f, double t0, double t_end,
                         double dt) {
  return integrate_flow(GradientHistory(traj, f), t0, t_end, dt);
}

DiffeoMap integrate_frozen_flow(const GradientHistory& hist, double t, double s_end, double ds) {
  return map_nodes(hist.grid(), t, t, [&](const Point& p) { return integrate_point_frozen(hist, p, t, s_end, ds); });
}

DiffeoMap integrate_frozen_flow(const FlowTrajectory& traj, const std::vector<ScalarField>& f, double t,
                                double s_end, double ds) {
  return integrate_frozen_flow(GradientHistory(traj, f), t, s_end, ds);
}

SymTensorField pullback_tensor(const DiffeoMap& map, const SymTensorField& T) {
  require(!T.is_metric_multiple() && T.t11().rows() == map.grid.N1 && T.t11().cols() == map.grid.N2,
          "pullback_tensor: tensor must live on the map's grid");
  const auto J = map.jacobian();
  const TorusGrid& grid = map.grid;
  ScalarField g11 = grid.zeros(), g12 = grid.zeros(), g22 = grid.zeros();
  for (int i = 0; i < grid.N1; ++i) {
    for (int j = 0; j < grid.N2; ++j) {
      const Point q = map.image(i, j);
      const double a = sample_periodic(T.t11(), grid, q[0], q[1]);
      const double b = sample_periodic(T.t12(), grid, q[0], q[1]);
      const double c = sample_periodic(T.t22(), grid, q[0], q[1]);
      const double j11 = J[0](i, j), j12 = J[1](i, j), j21 = J[2](i, j), j22 = J[3](i, j);
      if (!(j11 * j22 - j12 * j21 > 0.0)) throw InvariantViolation("pullback_tensor: degenerate Jacobian");
      g11(i, j) = j11 * j11 * a + 2.0 * j11 * j21 * b + j21 * j21 * c;
      g12(i, j) = j11 * j12 * a + (j11 * j22 + j21 * j12) * b + j21 * j22 * c;
      g22(i, j) = j12 * j12 * a + 2.0 * j12 * j22 * b + j22 * j22 * c;
    }
  }
  return SymTensorField(std::move(g11), std::move(g12), std::move(g22));
}

SymTensorField pullback_metric(const DiffeoMap& map, const MetricState& g) {
  require(g.is_torus() && g.torus().grid == map.grid, "pullback_metric: metric must live on the map's grid");
  const ScalarField c = conformal_factor(g);
  return pullback_tensor(map, SymTensorField(c, map.grid.zeros(), c));
}

DeviationStudy lemma13_orders(const FlowTrajectory& traj, const std::vector<ScalarField>& f, double t, int i, int j,
                              const std::vector<double>& h_list, int substeps) {
  require(h_list.size() >= 3, "lemma13_orders: at least three step sizes are needed for a fit");
  require(substeps > 0, "lemma13_orders: substeps must be positive");
  for (std::size_t k = 0; k < h_list.size(); ++k) {
    require(h_list[k] > 0.0 && (k == 0 || h_list[k] < h_list[k - 1]), "lemma13_orders: h_list must be positive and decreasing");
  }
  const GradientHistory hist(traj, f);
  const TorusGrid& grid = hist.grid();
  require(i >= 0 && i < grid.N1 && j >= 0 && j < grid.N2, "lemma13_orders: p must be a grid node");
  const ScalarField conf = conformal_factor(traj.state_at(t));
  const Point p0{grid.x(i), grid.y(j)};

  const auto moving = [&](const Point& x, double s) { return hist.velocity_jacobian(x, s); };
  const auto frozen = [&](const Point& x, double) { return hist.velocity_jacobian(x, t); };
  // g(t)(J e_a, J e_b) at the image point.
  const auto pulled = [&](const Point& q, const Mat2& J) {
    const double c = sample_periodic(conf, grid, q[0], q[1]);
    return Mat2{c * (J[0] * J[0] + J[2] * J[2]), c * (J[0] * J[1] + J[2] * J[3]), c * (J[0] * J[1] + J[2] * J[3]),
                c * (J[1] * J[1] + J[3] * J[3])};
  };

  DeviationStudy study;
  std::vector<double> hs, es, Es;
  for (double h : h_list) {
    const auto [xp, Jp] = rk4_tangent(moving, p0, t, t + h, substeps);
    const auto [xs, Js] = rk4_tangent(frozen, p0, 0.0, h, substeps);
    const Mat2 Ap = pulled(xp, Jp), As = pulled(xs, Js);
    const Point vp = hist.velocity(xp, t + h), vs = hist.velocity(xs, t);

    DeviationRecord r;
    r.h = h;
    r.e_norm = std::hypot(xp[0] - xs[0], xp[1] - xs[1]);
    r.de_dh = std::hypot(vp[0] - vs[0], vp[1] - vs[1]);
    for (int c = 0; c < 4; ++c) {
      r.E_val = std::max(r.E_val, std::abs(Ap[c] - As[c]));
      r.de_dx = std::max(r.de_dx, std::abs(Jp[c] - Js[c]));
    }
    study.records.push_back(r);
    hs.push_back(h);
    es.push_back(r.e_norm);
    Es.push_back(r.E_val);
  }
  study.slope_e = loglog_slope(hs, es);
  study.slope_E = loglog_slope(hs, Es);
  return study;
}

double lemma14_residual(const FlowTrajectory& traj, const std::vector<ScalarField>& f, double t0, double t, double dt,
                        int substeps) {
  require(dt > 0.0 && substeps > 0, "lemma14_residual: dt and substeps must be positive");
  const std::size_t km = traj.index_of(t - dt);
  const std::size_t kc = traj.index_of(t);
  const std::size_t kp = traj.index_of(t + dt);
  const GradientHistory hist(traj, f);
  const double ode_dt = traj.dt / substeps;

  const SymTensorField g_minus = pullback_metric(integrate_flow(hist, t0, t - dt, ode_dt), traj[km]);
  const SymTensorField g_plus = pullback_metric(integrate_flow(hist, t0, t + dt, ode_dt), traj[kp]);
  const SymTensorField lhs = (0.5 / dt) * (g_plus - g_minus);

  const MetricState& g = traj[kc];
  const ScalarField Rc = scalar_curvature(g) * conformal_factor(g);
  const SymTensorField hess = hessian(g, f[kc]);
  const SymTensorField rate(-1.0 * Rc - 2.0 * hess.t11(), -2.0 * hess.t12(), -1.0 * Rc - 2.0 * hess.t22());
  const SymTensorField rhs = pullback_tensor(integrate_flow(hist, t0, t, ode_dt), rate);
  return max_abs_diff(lhs, rhs);
}

double inverse_defect(const GradientHistory& hist, double t0, double t1, double dt) {
  const TorusGrid& grid = hist.grid();
  double worst = 0.0;
  for (int i = 0; i < grid.N1; ++i) {
    for (int j = 0; j < grid.N2; ++j) {
      const Point p{grid.x(i), grid.y(j)};
      const Point back = integrate_point(hist, integrate_point(hist, p, t0, t1, dt), t1, t0, dt);
      worst = std::max({worst, std::abs(back[0] - p[0]), std::abs(back[1] - p[1])});
    }
  }
  return worst;
}

}  // namespace rel
