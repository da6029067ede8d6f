#include "rel/stencil.hpp"

#include "rel/errors.hpp"

namespace rel::stencil {

namespace {

void check(const ScalarField& f, const TorusGrid& grid) {
  require(f.rows() == grid.N1 && f.cols() == grid.N2, "stencil: field shape does not match the grid");
}

// Applies op(i, j, im, ip, jm, jp) with periodic neighbour indices.
template <class Op>
ScalarField apply(const ScalarField& f, const TorusGrid& grid, Op&& op) {
  check(f, grid);
  ScalarField out(grid.N1, grid.N2);
  for (int i = 0; i < grid.N1; ++i) {
    const int im = i == 0 ? grid.N1 - 1 : i - 1;
    const int ip = i == grid.N1 - 1 ? 0 : i + 1;
    for (int j = 0; j < grid.N2; ++j) {
      const int jm = j == 0 ? grid.N2 - 1 : j - 1;
      const int jp = j == grid.N2 - 1 ? 0 : j + 1;
      out(i, j) = op(i, j, im, ip, jm, jp);
    }
  }
  return out;
}

}  // namespace

ScalarField dx(const ScalarField& f, const TorusGrid& grid) {
  const double s = 0.5 / grid.h1();
  return apply(f, grid, [&](int, int j, int im, int ip, int, int) { return s * (f(ip, j) - f(im, j)); });
}

ScalarField dy(const ScalarField& f, const TorusGrid& grid) {
  const double s = 0.5 / grid.h2();
  return apply(f, grid, [&](int i, int, int, int, int jm, int jp) { return s * (f(i, jp) - f(i, jm)); });
}

ScalarField dxx(const ScalarField& f, const TorusGrid& grid) {
  const double s = 1.0 / (grid.h1() * grid.h1());
  return apply(f, grid, [&](int i, int j, int im, int ip, int, int) {
    return s * (f(ip, j) - 2.0 * f(i, j) + f(im, j));
  });
}

ScalarField dyy(const ScalarField& f, const TorusGrid& grid) {
  const double s = 1.0 / (grid.h2() * grid.h2());
  return apply(f, grid, [&](int i, int j, int, int, int jm, int jp) {
    return s * (f(i, jp) - 2.0 * f(i, j) + f(i, jm));
  });
}

ScalarField dxy(const ScalarField& f, const TorusGrid& grid) {
  const double s = 0.25 / (grid.h1() * grid.h2());
  return apply(f, grid, [&](int, int, int im, int ip, int jm, int jp) {
    return s * (f(ip, jp) - f(ip, jm) - f(im, jp) + f(im, jm));
  });
}

ScalarField laplacian(const ScalarField& f, const TorusGrid& grid) {
  const double sx = 1.0 / (grid.h1() * grid.h1());
  const double sy = 1.0 / (grid.h2() * grid.h2());
  return apply(f, grid, [&](int i, int j, int im, int ip, int jm, int jp) {
    const double c = f(i, j);
    return sx * (f(ip, j) - 2.0 * c + f(im, j)) + sy * (f(i, jp) - 2.0 * c + f(i, jm));
  });
}

ScalarField edge_energy_density(const ScalarField& f, const TorusGrid& grid) {
  const double sx = 0.5 / (grid.h1() * grid.h1());
  const double sy = 0.5 / (grid.h2() * grid.h2());
  return apply(f, grid, [&](int i, int j, int im, int ip, int jm, int jp) {
    const double c = f(i, j);
    const double a = f(ip, j) - c, b = c - f(im, j);
    const double d = f(i, jp) - c, e = c - f(i, jm);
    return sx * (a * a + b * b) + sy * (d * d + e * e);
  });
}

}  // namespace rel::stencil
