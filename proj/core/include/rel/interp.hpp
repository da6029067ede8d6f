#pragma once

#include "rel/manifold.hpp"

namespace rel {

/// Periodic bicubic (Catmull-Rom) interpolation of a node field at (x, y) in
/// unwrapped coordinates. C1 across cells; reproduces node values exactly.
double sample_periodic(const ScalarField& field, const TorusGrid& grid, double x, double y);

struct SampleWithGradient {
  double value = 0.0;
  double dx = 0.0;
  double dy = 0.0;
};

/// The same interpolant together with its exact partial derivatives.
SampleWithGradient sample_periodic_grad(const ScalarField& field, const TorusGrid& grid, double x, double y);

}  // namespace rel
