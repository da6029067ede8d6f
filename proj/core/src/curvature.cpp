#include "rel/curvature.hpp"

#include <cmath>

#include "rel/errors.hpp"
#include "rel/stencil.hpp"

namespace rel {

ChristoffelCache ChristoffelCache::build(const MetricState& g) {
  if (g.is_sphere()) return {};
  const auto& t = g.torus();
  return {stencil::dx(t.u, t.grid), stencil::dy(t.u, t.grid)};
}

ScalarField scalar_curvature(const MetricState& g) {
  if (g.is_sphere()) {
    const auto& s = g.sphere();
    return ScalarField::constant(s.n * (s.n - 1) / (s.r * s.r));
  }
  const auto& t = g.torus();
  ScalarField R = stencil::laplacian(t.u, t.grid);
  for (std::size_t k = 0; k < R.size(); ++k) R[k] *= -2.0 * std::exp(-2.0 * t.u[k]);
  return R;
}

SymTensorField ricci_tensor(const MetricState& g) {
  if (g.is_sphere()) {
    const auto& s = g.sphere();
    return SymTensorField::metric_multiple((s.n - 1) / (s.r * s.r));
  }
  const auto& t = g.torus();
  ScalarField R = scalar_curvature(g);
  ScalarField diag(t.grid.N1, t.grid.N2);
  for (std::size_t k = 0; k < R.size(); ++k) diag[k] = 0.5 * R[k] * std::exp(2.0 * t.u[k]);
  return SymTensorField(diag, t.grid.zeros(), diag);
}

ScalarField laplace_beltrami(const MetricState& g, const ScalarField& phi) {
  g.check_shape(phi, "laplace_beltrami");
  if (g.is_sphere()) return ScalarField::constant(0.0);
  const auto& t = g.torus();
  ScalarField out = stencil::laplacian(phi, t.grid);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] *= std::exp(-2.0 * t.u[k]);
  return out;
}

ScalarField grad_norm_sq(const MetricState& g, const ScalarField& phi) {
  g.check_shape(phi, "grad_norm_sq");
  if (g.is_sphere()) return ScalarField::constant(0.0);
  const auto& t = g.torus();
  const ScalarField px = stencil::dx(phi, t.grid);
  const ScalarField py = stencil::dy(phi, t.grid);
  ScalarField out(t.grid.N1, t.grid.N2);
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = std::exp(-2.0 * t.u[k]) * (px[k] * px[k] + py[k] * py[k]);
  }
  return out;
}

SymTensorField hessian(const MetricState& g, const ScalarField& phi) {
  return hessian(g, phi, ChristoffelCache::build(g));
}

SymTensorField hessian(const MetricState& g, const ScalarField& phi, const ChristoffelCache& cache) {
  g.check_shape(phi, "hessian");
  if (g.is_sphere()) return SymTensorField::metric_multiple(0.0);
  const auto& grid = g.torus().grid;
  const ScalarField px = stencil::dx(phi, grid);
  const ScalarField py = stencil::dy(phi, grid);
  ScalarField h11 = stencil::dxx(phi, grid);
  ScalarField h12 = stencil::dxy(phi, grid);
  ScalarField h22 = stencil::dyy(phi, grid);
  // nabla_i nabla_j phi = d_ij phi - (u_i phi_j + u_j phi_i - delta_ij <du, dphi>)
  for (std::size_t k = 0; k < h11.size(); ++k) {
    const double ax = cache.ux[k] * px[k];
    const double ay = cache.uy[k] * py[k];
    h11[k] += -ax + ay;
    h22[k] += ax - ay;
    h12[k] -= cache.ux[k] * py[k] + cache.uy[k] * px[k];
  }
  return SymTensorField(std::move(h11), std::move(h12), std::move(h22));
}

SymTensorField lie_derivative(const MetricState& g, const ScalarField& f) {
  return -2.0 * hessian(g, f);
}

ScalarField tensor_norm_sq(const MetricState& g, const SymTensorField& T) {
  if (g.is_sphere()) {
    const double c = T.coefficient();
    return ScalarField::constant(g.sphere().n * c * c);
  }
  require(!T.is_metric_multiple(), "tensor_norm_sq: sphere tensor on a torus metric");
  const auto& t = g.torus();
  g.check_shape(T.t11(), "tensor_norm_sq");
  ScalarField out(t.grid.N1, t.grid.N2);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double a = T.t11()[k], b = T.t12()[k], c = T.t22()[k];
    out[k] = std::exp(-4.0 * t.u[k]) * (a * a + 2.0 * b * b + c * c);
  }
  return out;
}

}  // namespace rel
