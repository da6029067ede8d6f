#include "rel/entropy.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "rel/conjugate.hpp"
#include "rel/curvature.hpp"
#include "rel/errors.hpp"
#include "rel/stencil.hpp"

namespace rel {

namespace {

using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

constexpr double kPhiFloor = 1e-12;
constexpr double kArmijo = 1e-4;
constexpr int kMaxHalvings = 60;
constexpr double kPreconditionShift = 1.0;

double four_pi_tau_pow(double tau, int n) { return std::pow(4.0 * std::numbers::pi * tau, 0.5 * n); }

void require_tau(double tau, const char* who) {
  require(std::isfinite(tau) && tau > 0.0, std::string(who) + ": tau must be positive");
}

Vec to_vec(const ScalarField& f) { return Eigen::Map<const Vec>(f.values().data(), static_cast<long>(f.size())); }

ScalarField to_field(const Vec& v, int rows, int cols) {
  ScalarField f(rows, cols);
  std::copy(v.data(), v.data() + v.size(), f.values().begin());
  return f;
}

// integral of |grad phi|^2 dV; conformally invariant in two dimensions.
double dirichlet_energy(const MetricState& g, const ScalarField& phi) {
  if (g.is_sphere()) return 0.0;
  const auto& t = g.torus();
  return stencil::edge_energy_density(phi, t.grid).sum() * t.grid.cell_area();
}

// Sparse matrix of the edge Dirichlet form: x^T L x = dirichlet_energy(x).
SpMat dirichlet_matrix(const TorusGrid& grid) {
  const double a = grid.cell_area();
  const double cx = a / (grid.h1() * grid.h1());
  const double cy = a / (grid.h2() * grid.h2());
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(grid.nodes() * 5);
  for (int i = 0; i < grid.N1; ++i) {
    for (int j = 0; j < grid.N2; ++j) {
      const int k = i * grid.N2 + j;
      trips.emplace_back(k, k, 2.0 * cx + 2.0 * cy);
      trips.emplace_back(k, grid.wrap1(i + 1) * grid.N2 + j, -cx);
      trips.emplace_back(k, grid.wrap1(i - 1) * grid.N2 + j, -cx);
      trips.emplace_back(k, i * grid.N2 + grid.wrap2(j + 1), -cy);
      trips.emplace_back(k, i * grid.N2 + grid.wrap2(j - 1), -cy);
    }
  }
  const auto n = static_cast<long>(grid.nodes());
  SpMat L(n, n);
  L.setFromTriplets(trips.begin(), trips.end());
  return L;
}

SpMat diagonal(const Vec& d) {
  SpMat D(d.size(), d.size());
  D.reserve(Eigen::VectorXi::Constant(d.size(), 1));
  for (long k = 0; k < d.size(); ++k) D.insert(k, k) = d[k];
  return D;
}

double phi2_log_phi2(double p) {
  const double p2 = p * p;
  return p2 > 0.0 ? p2 * std::log(p2) : 0.0;
}

// Constant-f value of W on a manifold with constant R.
double sphere_mu(const MetricState& g, double tau) {
  const int n = g.dimension();
  const double R = scalar_curvature(g)[0];
  return tau * R + std::log(total_volume(g)) - 0.5 * n * std::log(4.0 * std::numbers::pi * tau) - n;
}

// Uniform double in [0,1) from the top 53 bits, identical on every platform.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// W_bar in Phi variables on the torus, with its Riesz gradient in <a,b> = c sum w a b.
class MuProblem {
 public:
  MuProblem(const MetricState& g, double tau) : g_(g), tau_(tau) {
    const auto& t = g.torus();
    grid_ = t.grid;
    w_ = to_vec(volume_weights(g));
    Rw_ = to_vec(scalar_curvature(g)).cwiseProduct(w_);
    c_ = 1.0 / four_pi_tau_pow(tau, 2);
    L_ = dirichlet_matrix(grid_);
    const SpMat P = 8.0 * tau * L_ + kPreconditionShift * diagonal(w_);
    solver_.compute(P);
    if (solver_.info() != Eigen::Success) throw InvariantViolation("mu_estimate: preconditioner factorization failed");
  }

  double inner(const Vec& a, const Vec& b) const { return c_ * (w_.cwiseProduct(a)).dot(b); }

  Vec normalize(Vec phi) const {
    phi = phi.cwiseMax(kPhiFloor);
    return phi / std::sqrt(inner(phi, phi));
  }

  double objective(const Vec& phi) const {
    double ent = 0.0;
    for (long k = 0; k < phi.size(); ++k) ent += w_[k] * phi2_log_phi2(phi[k]);
    return c_ * (tau_ * Rw_.dot(phi.cwiseProduct(phi)) + 4.0 * tau_ * phi.dot(L_ * phi) - ent) - 2.0;
  }

  Vec riesz_gradient(const Vec& phi) const {
    Vec grad = 2.0 * tau_ * Rw_.cwiseProduct(phi) + 8.0 * tau_ * (L_ * phi);
    for (long k = 0; k < phi.size(); ++k) {
      grad[k] -= w_[k] * 2.0 * phi[k] * (std::log(phi[k] * phi[k]) + 1.0);
      grad[k] /= w_[k];
    }
    return grad;
  }

  Vec tangent(const Vec& v, const Vec& phi) const { return v - inner(v, phi) * phi; }

  Vec precondition(const Vec& v) const { return solver_.solve(w_.cwiseProduct(v)); }

  const TorusGrid& grid() const { return grid_; }

 private:
  const MetricState& g_;
  double tau_;
  TorusGrid grid_;
  Vec w_, Rw_;
  double c_ = 0.0;
  SpMat L_;
  Eigen::SimplicialLDLT<SpMat> solver_;
};

struct StartOutcome {
  Vec phi;
  double value = 0.0;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

StartOutcome descend(const MuProblem& prob, Vec phi, const MuOptions& opts) {
  StartOutcome out;
  phi = prob.normalize(std::move(phi));
  double J = prob.objective(phi);
  Vec Gt = prob.tangent(prob.riesz_gradient(phi), phi);
  double res = std::sqrt(prob.inner(Gt, Gt));
  int it = 0;
  for (; it < opts.max_iter && res >= opts.tol; ++it) {
    const Vec St = prob.tangent(prob.precondition(Gt), phi);
    const double slope = prob.inner(Gt, St);
    if (!(slope > 0.0)) break;

    // Below `noise` the objective cannot resolve the predicted decrease, so
    // the step is judged by the stationarity residual instead.
    const double noise = 1e-12 * std::max(1.0, std::abs(J));
    double alpha = 1.0;
    bool accepted = false;
    Vec next, Gt_next;
    double J_next = 0.0, res_next = 0.0;
    for (int h = 0; h < kMaxHalvings && !accepted; ++h, alpha *= 0.5) {
      next = prob.normalize(phi - alpha * St);
      J_next = prob.objective(next);
      const bool resolved = alpha * slope > noise;
      if (resolved && J_next > J - kArmijo * alpha * slope) continue;
      if (!resolved && J_next > J + noise) continue;
      Gt_next = prob.tangent(prob.riesz_gradient(next), next);
      res_next = std::sqrt(prob.inner(Gt_next, Gt_next));
      accepted = resolved || res_next < res;
    }
    if (!accepted) break;
    phi = std::move(next);
    J = J_next;
    Gt = std::move(Gt_next);
    res = res_next;
  }
  out.phi = std::move(phi);
  out.value = J;
  out.residual = res;
  out.iterations = it;
  out.converged = res < opts.tol;
  return out;
}

std::vector<Vec> mu_starts(const TorusGrid& grid, int starts, std::uint64_t seed) {
  std::vector<Vec> out;
  out.emplace_back(Vec::Ones(static_cast<long>(grid.nodes())));
  std::mt19937_64 rng(seed);
  constexpr int modes[4][2] = {{1, 0}, {0, 1}, {1, 1}, {1, -1}};
  for (int s = 1; s < starts; ++s) {
    double amp[4], phase[4];
    for (int m = 0; m < 4; ++m) {
      amp[m] = uniform01(rng) - 0.5;
      phase[m] = 2.0 * std::numbers::pi * uniform01(rng);
    }
    Vec v(static_cast<long>(grid.nodes()));
    for (int i = 0; i < grid.N1; ++i) {
      for (int j = 0; j < grid.N2; ++j) {
        double e = 0.0;
        for (int m = 0; m < 4; ++m) {
          const double arg = 2.0 * std::numbers::pi * (modes[m][0] * grid.x(i) / grid.L1 + modes[m][1] * grid.y(j) / grid.L2);
          e += amp[m] * std::cos(arg + phase[m]);
        }
        v[i * grid.N2 + j] = std::exp(e);
      }
    }
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace

double F_functional(const MetricState& g, const ScalarField& f) {
  g.check_shape(f, "F_functional");
  const ScalarField R = scalar_curvature(g);
  const ScalarField ef = f.map([](double v) { return std::exp(-v); });
  const ScalarField Phi = f.map([](double v) { return std::exp(-0.5 * v); });
  return integrate(R * ef, g) + 4.0 * dirichlet_energy(g, Phi);
}

double W_functional(const MetricState& g, const ScalarField& f, double tau) {
  require_tau(tau, "W_functional");
  g.check_shape(f, "W_functional");
  const int n = g.dimension();
  const ScalarField R = scalar_curvature(g);
  ScalarField integrand(f.rows(), f.cols());
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double Rk = R.size() == 1 ? R[0] : R[k];
    integrand[k] = (tau * Rk + f[k] - n) * std::exp(-f[k]);
  }
  const ScalarField Phi = f.map([](double v) { return std::exp(-0.5 * v); });
  return (integrate(integrand, g) + 4.0 * tau * dirichlet_energy(g, Phi)) / four_pi_tau_pow(tau, n);
}

double W_bar(const MetricState& g, const ScalarField& Phi, double tau) {
  require_tau(tau, "W_bar");
  g.check_shape(Phi, "W_bar");
  const int n = g.dimension();
  const ScalarField R = scalar_curvature(g);
  ScalarField integrand(Phi.rows(), Phi.cols());
  for (std::size_t k = 0; k < Phi.size(); ++k) {
    const double Rk = R.size() == 1 ? R[0] : R[k];
    integrand[k] = tau * Rk * Phi[k] * Phi[k] - phi2_log_phi2(Phi[k]);
  }
  return (integrate(integrand, g) + 4.0 * tau * dirichlet_energy(g, Phi)) / four_pi_tau_pow(tau, n) - n;
}

ScalarField normalize_f(const MetricState& g, const ScalarField& f, double tau) {
  require_tau(tau, "normalize_f");
  return f + std::log(constraint_value(f, g, tau));
}

double rayleigh_quotient(const MetricState& g, const ScalarField& psi) {
  g.check_shape(psi, "rayleigh_quotient");
  const ScalarField R = scalar_curvature(g);
  const ScalarField psi2 = psi * psi;
  const double norm = integrate(psi2, g);
  require(norm > 0.0, "rayleigh_quotient: psi must be nonzero");
  const ScalarField Rpsi2 = R.size() == psi2.size() ? R * psi2 : psi2 * R[0];
  return (integrate(Rpsi2, g) + 4.0 * dirichlet_energy(g, psi)) / norm;
}

EigResult lambda1(const MetricState& g, const EigOptions& opts) {
  require(opts.max_iter > 0 && opts.tol > 0.0, "lambda1: options must be positive");
  EigResult res;
  if (g.is_sphere()) {
    res.lambda1 = scalar_curvature(g)[0];
    res.eigenfunction = ScalarField::constant(1.0 / std::sqrt(total_volume(g)));
    return res;
  }

  const auto& t = g.torus();
  const Vec w = to_vec(volume_weights(g));
  const Vec R = to_vec(scalar_curvature(g));
  const SpMat K = diagonal(R.cwiseProduct(w)) + 4.0 * dirichlet_matrix(t.grid);
  const double sigma = 1.0 + std::max(0.0, -R.minCoeff());
  Eigen::SimplicialLDLT<SpMat> P(K + sigma * diagonal(w));
  if (P.info() != Eigen::Success) throw InvariantViolation("lambda1: preconditioner factorization failed");

  const auto wnorm = [&](const Vec& v) { return std::sqrt(w.cwiseProduct(v).dot(v)); };
  Vec x = Vec::Ones(w.size());
  x /= wnorm(x);
  double rho = x.dot(K * x);
  Vec r = K * x - rho * w.cwiseProduct(x);
  double resid = std::sqrt(r.cwiseQuotient(w).dot(r));
  int it = 0;
  for (; it < opts.max_iter && resid >= opts.tol; ++it) {
    // Rayleigh-Ritz on span{x, P^{-1} r}, orthonormal in the w inner product.
    Vec d = P.solve(r);
    d -= w.cwiseProduct(x).dot(d) * x;
    const double dn = wnorm(d);
    if (!(dn > 0.0)) break;
    d /= dn;
    Eigen::Matrix2d A;
    A(0, 0) = rho;
    A(0, 1) = A(1, 0) = x.dot(K * d);
    A(1, 1) = d.dot(K * d);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(A);
    const Eigen::Vector2d c = es.eigenvectors().col(0);
    x = c[0] * x + c[1] * d;
    x /= wnorm(x);
    rho = x.dot(K * x);
    r = K * x - rho * w.cwiseProduct(x);
    resid = std::sqrt(r.cwiseQuotient(w).dot(r));
  }
  if (!(resid < opts.tol)) throw ConvergenceError("lambda1: no convergence", resid);
  if (x.sum() < 0.0) x = -x;
  res.eigenfunction = to_field(x, t.grid.N1, t.grid.N2);
  res.lambda1 = rayleigh_quotient(g, res.eigenfunction);
  res.iterations = it;
  res.residual = resid;
  return res;
}

MuResult mu_estimate(const MetricState& g, double tau, const MuOptions& opts) {
  require_tau(tau, "mu_estimate");
  require(opts.starts > 0 && opts.max_iter > 0 && opts.tol > 0.0, "mu_estimate: options must be positive");
  MuResult res;
  if (g.is_sphere()) {
    res.value = sphere_mu(g, tau);
    res.minimizer_f = ScalarField::constant(std::log(total_volume(g) / four_pi_tau_pow(tau, g.dimension())));
    res.starts_used = 1;
    return res;
  }

  const MuProblem prob(g, tau);
  bool any = false;
  double best_failed_residual = std::numeric_limits<double>::infinity();
  Vec best_phi;
  double best = std::numeric_limits<double>::infinity();
  for (const Vec& start : mu_starts(prob.grid(), opts.starts, opts.seed)) {
    const StartOutcome o = descend(prob, start, opts);
    res.iterations += o.iterations;
    if (!o.converged) {
      best_failed_residual = std::min(best_failed_residual, o.residual);
      continue;
    }
    ++res.starts_used;
    if (!any || o.value < best) {
      any = true;
      best = o.value;
      best_phi = o.phi;
      res.grad_residual = o.residual;
    }
  }
  if (!any) throw ConvergenceError("mu_estimate: no start converged", best_failed_residual);

  const auto& grid = prob.grid();
  res.minimizer_f = to_field(best_phi, grid.N1, grid.N2).map([](double p) { return -std::log(p * p); });
  res.value = W_functional(g, res.minimizer_f, tau);
  return res;
}

BoundReport bound_check(const MetricState& g, const ScalarField& f, double tau, double delta) {
  require_tau(tau, "bound_check");
  require(delta > 0.0 && delta < 1.0, "bound_check: delta must lie in (0, 1)");
  require(std::abs(constraint_value(f, g, tau) - 1.0) < 1e-8, "bound_check: f must be normalized");
  const int n = g.dimension();
  const ScalarField Phi = f.map([](double v) { return std::exp(-0.5 * v); });
  const double mass = integrate(Phi * Phi, g);
  const double ent = integrate(Phi.map(phi2_log_phi2), g);

  BoundReport rep;
  rep.tau = tau;
  rep.delta = delta;
  rep.lambda1 = lambda1(g).lambda1;
  rep.I = (4.0 * delta * tau * dirichlet_energy(g, Phi) - ent) / mass;
  rep.lhs = W_functional(g, f, tau);
  const double R_sup = scalar_curvature(g).max_abs();
  rep.rhs = (1.0 - delta) * tau * rep.lambda1 - delta * tau * R_sup / four_pi_tau_pow(tau, n) + rep.I - n;
  rep.slack = rep.lhs - rep.rhs;
  return rep;
}

double entropy_production(const MetricState& g, const ScalarField& f, double tau) {
  require_tau(tau, "entropy_production");
  g.check_shape(f, "entropy_production");
  const SymTensorField T = ricci_tensor(g) + hessian(g, f) - (0.5 / tau) * metric_tensor(g);
  const ScalarField density = tensor_norm_sq(g, T) * f.map([](double v) { return std::exp(-v); });
  return 2.0 * tau * integrate(density, g) / four_pi_tau_pow(tau, g.dimension());
}

ScalingReport mu_scaling_check(const MetricState& g, double tau, double lambda, const MuOptions& opts) {
  require(std::isfinite(lambda) && lambda > 0.0, "mu_scaling_check: lambda must be positive");
  ScalingReport rep;
  rep.mu = mu_estimate(g, tau, opts).value;
  rep.mu_scaled = lambda == 1.0 ? rep.mu : mu_estimate(scale_metric(g, lambda), lambda * tau, opts).value;
  rep.gap = std::abs(rep.mu - rep.mu_scaled);
  return rep;
}

}  // namespace rel
