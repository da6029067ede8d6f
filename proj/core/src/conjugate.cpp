#include "rel/conjugate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "rel/curvature.hpp"
#include "rel/errors.hpp"
#include "rel/format.hpp"
#include "rel/stencil.hpp"

namespace rel {

namespace {

constexpr double kPotentialStepLimit = 0.1;

double four_pi_tau_pow(double tau, int n) { return std::pow(4.0 * std::numbers::pi * tau, 0.5 * n); }

double floor_at(double C2, double t1, double t, double min_H0) { return std::exp(-C2 * (t1 - t)) * min_H0; }

// One ladder interval of the s-march with the metric frozen at `g`.
ScalarField march_interval(const MetricState& g, ScalarField H, double dt) {
  const auto& t = g.torus();
  const ScalarField R = scalar_curvature(g);
  const ScalarField inv_conf = t.u.map([](double u) { return std::exp(-2.0 * u); });
  const double R_sup = R.max_abs();

  int substeps = 1;
  while (dt / substeps > cfl_bound(g) || (dt / substeps) * R_sup > kPotentialStepLimit) substeps *= 2;
  const double ds = dt / substeps;
  // Forward Euler step; Heun's method averages two of them, which keeps the
  // positivity of each stage under the same step limit.
  auto euler = [&](const ScalarField& X) {
    const ScalarField lap = stencil::laplacian(X, t.grid);
    ScalarField out = X;
    for (std::size_t k = 0; k < X.size(); ++k) out[k] += ds * (inv_conf[k] * lap[k] - R[k] * X[k]);
    return out;
  };
  for (int s = 0; s < substeps; ++s) {
    const ScalarField stage = euler(H);
    H = (H + euler(stage)) * 0.5;
  }
  return H;
}

}  // namespace

ConjugateSolution solve_conjugate_heat(const FlowTrajectory& traj, const ScalarField& H_final, double floor_tol) {
  require(traj.size() >= 1, "solve_conjugate_heat: empty trajectory");
  const MetricState& g_final = traj.states.back();
  g_final.check_shape(H_final, "solve_conjugate_heat");
  require(H_final.all_finite(), "solve_conjugate_heat: final data is not finite");
  require(H_final.min() > 0.0, "solve_conjugate_heat: final data must be positive");

  const std::size_t K = traj.size() - 1;
  ConjugateSolution sol;
  sol.t1 = traj.final_time();
  sol.H.resize(traj.size());
  sol.H[K] = H_final;
  for (const auto& g : traj.states) sol.C2 = std::max(sol.C2, scalar_curvature(g).max_abs());

  const double min_H0 = H_final.min();
  for (std::size_t k = K; k-- > 0;) {
    if (g_final.is_sphere()) {
      const int n = g_final.sphere().n;
      const double ratio = traj[K].sphere().r / traj[k].sphere().r;
      sol.H[k] = H_final * std::pow(ratio, n);
    } else {
      sol.H[k] = march_interval(traj[k + 1], sol.H[k + 1], traj.dt);
    }
    const double floor = floor_at(sol.C2, sol.t1, traj.time(k), min_H0);
    if (!sol.H[k].all_finite() || sol.H[k].min() < floor - floor_tol) {
      throw InvariantViolation("solve_conjugate_heat: H fell below the positivity floor at t = " +
                               format_double(traj.time(k)));
    }
  }
  sol.f = H_to_f(sol, traj);
  return sol;
}

PositivityReport positivity_floor(const ConjugateSolution& sol, const FlowTrajectory& traj, double tol) {
  require(sol.H.size() == traj.size(), "positivity_floor: solution and trajectory are not aligned");
  PositivityReport rep;
  rep.C2 = sol.C2;
  rep.min_H0 = sol.H.back().min();
  rep.min_margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double floor = floor_at(sol.C2, sol.t1, traj.time(k), rep.min_H0);
    const double margin = sol.H[k].min() - floor;
    rep.floor.push_back(floor);
    rep.margin.push_back(margin);
    rep.min_margin = std::min(rep.min_margin, margin);
  }
  rep.pass = rep.min_margin >= -tol;
  return rep;
}

std::vector<ScalarField> H_to_f(const ConjugateSolution& sol, const FlowTrajectory& traj) {
  require(sol.H.size() == traj.size(), "H_to_f: solution and trajectory are not aligned");
  std::vector<ScalarField> f;
  f.reserve(sol.H.size());
  for (std::size_t k = 0; k < sol.H.size(); ++k) {
    const double scale = four_pi_tau_pow(traj.tau(k), traj[k].dimension());
    f.push_back(sol.H[k].map([scale](double h) {
      if (!(h > 0.0)) throw PreconditionError("H_to_f: H must be positive");
      return -std::log(scale * h);
    }));
  }
  return f;
}

ScalarField f_to_H(const ScalarField& f, double tau, int n) {
  require(tau > 0.0, "f_to_H: tau must be positive");
  const double scale = 1.0 / four_pi_tau_pow(tau, n);
  return f.map([scale](double v) { return scale * std::exp(-v); });
}

double mass(const ConjugateSolution& sol, const FlowTrajectory& traj, std::size_t index) {
  require(sol.H.size() == traj.size() && index < traj.size(), "mass: index outside the aligned solution");
  return integrate(sol.H[index], traj[index]);
}

double constraint_value(const ScalarField& f, const MetricState& g, double tau) {
  require(std::isfinite(tau) && tau > 0.0, "constraint_value: tau must be positive");
  g.check_shape(f, "constraint_value");
  return integrate(f.map([](double v) { return std::exp(-v); }), g) / four_pi_tau_pow(tau, g.dimension());
}

void write_mass_csv(const ConjugateSolution& sol, const FlowTrajectory& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "t,mass,constraint\n";
  for (std::size_t k = 0; k < traj.size(); ++k) {
    out << format_double(traj.time(k)) << ',' << format_double(mass(sol, traj, k)) << ','
        << format_double(constraint_value(sol.f[k], traj[k], traj.tau(k))) << '\n';
  }
}

}  // namespace rel
