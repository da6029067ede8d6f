#pragma once

#include "rel/manifold.hpp"

// Second-order centered differences on the periodic node grid. Every torus
// operator in the library is built from these.
namespace rel::stencil {

ScalarField dx(const ScalarField& f, const TorusGrid& grid);
ScalarField dy(const ScalarField& f, const TorusGrid& grid);
ScalarField dxx(const ScalarField& f, const TorusGrid& grid);
ScalarField dyy(const ScalarField& f, const TorusGrid& grid);
ScalarField dxy(const ScalarField& f, const TorusGrid& grid);

/// Flat 5-point Laplacian, dxx + dyy.
ScalarField laplacian(const ScalarField& f, const TorusGrid& grid);

/// Flat Dirichlet energy density built from the four one-sided edge
/// differences: 1/2 sum_edges (df/h)^2. Summed against h1*h2 it equals
/// -<f, laplacian(f)>, so it has no odd-even null space.
ScalarField edge_energy_density(const ScalarField& f, const TorusGrid& grid);

}  // namespace rel::stencil
