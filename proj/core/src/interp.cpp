#include "rel/interp.hpp"

#include <cmath>

namespace rel {

namespace {

// Catmull-Rom weights for the four nodes around fractional offset t in [0,1).
void catmull_rom(double t, double w[4]) {
  const double t2 = t * t, t3 = t2 * t;
  w[0] = 0.5 * (-t3 + 2.0 * t2 - t);
  w[1] = 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0);
  w[2] = 0.5 * (-3.0 * t3 + 4.0 * t2 + t);
  w[3] = 0.5 * (t3 - t2);
}

void catmull_rom_derivative(double t, double w[4]) {
  const double t2 = t * t;
  w[0] = 0.5 * (-3.0 * t2 + 4.0 * t - 1.0);
  w[1] = 0.5 * (9.0 * t2 - 10.0 * t);
  w[2] = 0.5 * (-9.0 * t2 + 8.0 * t + 1.0);
  w[3] = 0.5 * (3.0 * t2 - 2.0 * t);
}

// Splits a grid coordinate into a cell index and offset, snapping offsets
// that are roundoff away from a node.
void locate(double s, int& cell, double& t) {
  const double fl = std::floor(s);
  t = s - fl;
  cell = static_cast<int>(fl);
  if (t > 1.0 - 1e-12) {
    ++cell;
    t = 0.0;
  } else if (t < 1e-12) {
    t = 0.0;
  }
}

}  // namespace

double sample_periodic(const ScalarField& field, const TorusGrid& grid, double x, double y) {
  int ci, cj;
  double tx, ty;
  locate(x / grid.h1(), ci, tx);
  locate(y / grid.h2(), cj, ty);
  double wx[4], wy[4];
  catmull_rom(tx, wx);
  catmull_rom(ty, wy);
  double acc = 0.0;
  for (int a = 0; a < 4; ++a) {
    const int i = grid.wrap1(ci - 1 + a);
    double row = 0.0;
    for (int b = 0; b < 4; ++b) row += wy[b] * field(i, grid.wrap2(cj - 1 + b));
    acc += wx[a] * row;
  }
  return acc;
}

SampleWithGradient sample_periodic_grad(const ScalarField& field, const TorusGrid& grid, double x, double y) {
  int ci, cj;
  double tx, ty;
  locate(x / grid.h1(), ci, tx);
  locate(y / grid.h2(), cj, ty);
  double wx[4], wy[4], dwx[4], dwy[4];
  catmull_rom(tx, wx);
  catmull_rom(ty, wy);
  catmull_rom_derivative(tx, dwx);
  catmull_rom_derivative(ty, dwy);
  SampleWithGradient out;
  for (int a = 0; a < 4; ++a) {
    const int i = grid.wrap1(ci - 1 + a);
    double row = 0.0, drow = 0.0;
    for (int b = 0; b < 4; ++b) {
      const double v = field(i, grid.wrap2(cj - 1 + b));
      row += wy[b] * v;
      drow += dwy[b] * v;
    }
    out.value += wx[a] * row;
    out.dx += dwx[a] * row;
    out.dy += wx[a] * drow;
  }
  out.dx /= grid.h1();
  out.dy /= grid.h2();
  return out;
}

}  // namespace rel
