#pragma once

#include "rel/manifold.hpp"

namespace rel {

/// First derivatives of the conformal factor. On the conformal torus these
/// determine every Christoffel symbol:
///   Gamma^k_ij = delta_ik u_j + delta_jk u_i - delta_ij u_k.
/// Empty for the sphere.
struct ChristoffelCache {
  ScalarField ux;
  ScalarField uy;

  static ChristoffelCache build(const MetricState& g);
};

/// R = -2 e^{-2u} Lap0 u on the torus, n(n-1)/r^2 on the sphere.
ScalarField scalar_curvature(const MetricState& g);

/// Ric = (R/2) g on surfaces, (n-1)/r^2 g on the sphere.
SymTensorField ricci_tensor(const MetricState& g);

ScalarField laplace_beltrami(const MetricState& g, const ScalarField& phi);

/// |grad phi|^2 = e^{-2u} (phi_x^2 + phi_y^2), centered differences.
ScalarField grad_norm_sq(const MetricState& g, const ScalarField& phi);

/// Covariant Hessian nabla_i nabla_j phi.
SymTensorField hessian(const MetricState& g, const ScalarField& phi);
SymTensorField hessian(const MetricState& g, const ScalarField& phi, const ChristoffelCache& cache);

/// L_V g for V = -grad f, i.e. -2 Hess f.
SymTensorField lie_derivative(const MetricState& g, const ScalarField& f);

/// g^{ik} g^{jl} T_ij T_kl.
ScalarField tensor_norm_sq(const MetricState& g, const SymTensorField& T);

}  // namespace rel
