#pragma once

#include <cstdint>

#include "rel/manifold.hpp"

namespace rel {

/// F(g, f) = integral of (R + |grad f|^2) e^{-f} dV.
double F_functional(const MetricState& g, const ScalarField& f);

/// W(g, f, tau) = (4 pi tau)^{-n/2} integral of {tau (R + |grad f|^2) + f - n} e^{-f} dV.
///
/// On the torus the gradient term is evaluated as 4 |grad e^{-f/2}|^2 with the
/// edge-difference Dirichlet form, so W(g, f, tau) and W_bar(g, e^{-f/2}, tau)
/// agree to roundoff whenever f is normalized.
double W_functional(const MetricState& g, const ScalarField& f, double tau);

/// (4 pi tau)^{-n/2} integral of {tau (R Phi^2 + 4 |grad Phi|^2) - Phi^2 log Phi^2} dV - n.
double W_bar(const MetricState& g, const ScalarField& Phi, double tau);

/// f + log C(f), where C is the constraint value; the result satisfies C = 1.
ScalarField normalize_f(const MetricState& g, const ScalarField& f, double tau);

/// (integral of R psi^2 + 4 |grad psi|^2) / (integral of psi^2).
double rayleigh_quotient(const MetricState& g, const ScalarField& psi);

struct EigOptions {
  int max_iter = 5000;
  double tol = 1e-11;
};

struct EigResult {
  double lambda1 = 0.0;
  /// Positive, unit L2(dV) norm.
  ScalarField eigenfunction;
  int iterations = 0;
  double residual = 0.0;
};

/// Lowest eigenvalue of R - 4 Lap_g. Preconditioned gradient descent on the
/// Rayleigh quotient with an exact line search along the search direction.
/// Throws ConvergenceError when the residual stays above `tol`.
EigResult lambda1(const MetricState& g, const EigOptions& opts = {});

struct MuOptions {
  int starts = 5;
  int max_iter = 5000;
  double tol = 1e-8;
  std::uint64_t seed = 42;
};

struct MuResult {
  double value = 0.0;
  ScalarField minimizer_f;
  int iterations = 0;
  double grad_residual = 0.0;
  int starts_used = 0;
};

/// Upper estimate of mu(g, tau) = inf W(g, f, tau) over normalized f.
///
/// Torus: projected gradient descent on W_bar over Phi > 0 on the constraint
/// sphere, with a Sobolev-type preconditioner and Armijo backtracking from a
/// unit step. Runs a constant start plus `starts - 1` seeded low-frequency
/// perturbations and keeps the lowest converged value. Sphere: the closed form
/// over constant f. Throws ConvergenceError when no start converges.
MuResult mu_estimate(const MetricState& g, double tau, const MuOptions& opts = {});

struct BoundReport {
  double tau = 0.0;
  double delta = 0.0;
  double lambda1 = 0.0;
  double I = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
};

/// W(g, f, tau) against (1-delta) tau lambda1 - delta tau (4 pi tau)^{-n/2} |R|_inf + I(Phi) - n
/// with Phi = e^{-f/2} and
/// I(Phi) = (4 delta tau integral |grad Phi|^2 - integral Phi^2 log Phi^2) / integral Phi^2.
BoundReport bound_check(const MetricState& g, const ScalarField& f, double tau, double delta);

/// 2 tau (4 pi tau)^{-n/2} integral of |Ric + Hess f - g/(2 tau)|^2 e^{-f} dV.
double entropy_production(const MetricState& g, const ScalarField& f, double tau);

struct ScalingReport {
  double mu = 0.0;
  double mu_scaled = 0.0;
  double gap = 0.0;
};

/// |mu(g, tau) - mu(lambda g, lambda tau)| using the same starts on both sides.
ScalingReport mu_scaling_check(const MetricState& g, double tau, double lambda, const MuOptions& opts = {});

}  // namespace rel
