#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "rel/diffeo.hpp"
#include "rel/manifold.hpp"

namespace test {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

using Fn2 = std::function<double(double, double)>;

inline rel::ScalarField sample(const rel::TorusGrid& grid, const Fn2& fn) {
  rel::ScalarField out = grid.zeros();
  for (int i = 0; i < grid.N1; ++i)
    for (int j = 0; j < grid.N2; ++j) out(i, j) = fn(grid.x(i), grid.y(j));
  return out;
}

inline rel::TorusGrid unit_grid(int N) { return rel::TorusGrid::make(1.0, 1.0, N, N); }

inline rel::MetricState torus(int N, const Fn2& u) {
  const rel::TorusGrid grid = unit_grid(N);
  return rel::make_torus(1.0, 1.0, N, N, sample(grid, u));
}

inline rel::MetricState flat(int N) {
  return torus(N, [](double, double) { return 0.0; });
}

inline rel::MetricState sinx(int N, double eps) {
  return torus(N, [eps](double x, double) { return eps * std::sin(two_pi * x); });
}

inline double max_diff(const rel::ScalarField& a, const rel::ScalarField& b) { return (a - b).max_abs(); }

/// Error of one grid function against an analytic one, sampled at the nodes.
inline double max_error(const rel::ScalarField& a, const rel::TorusGrid& grid, const Fn2& exact) {
  return max_diff(a, sample(grid, exact));
}

/// Periodic trapezoid rule on [0,1) with M points; spectrally accurate for smooth periodic g.
inline double periodic_quadrature(const std::function<double(double)>& g, int M) {
  double s = 0.0;
  for (int k = 0; k < M; ++k) s += g(static_cast<double>(k) / M);
  return s / M;
}

/// Dense matrices of the weighted problem (R - 4 Lap_g) psi = lambda psi on
/// the conformal torus, assembled directly from the 5-point Laplacian:
/// K = diag(R e^{2u} h^2) - 4 h^2 Lap0, M = diag(e^{2u} h^2).
/// R is the 5-point curvature -2 e^{-2u} Lap0 u.
inline double dense_lambda1(const rel::ScalarField& u, double L) {
  const int N = u.rows();
  const double h = L / N;
  const int n = N * N;
  auto id = [N](int i, int j) { return ((i + N) % N) * N + (j + N) % N; };
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      const int k = id(i, j);
      lap(k, k) -= 4.0 / (h * h);
      lap(k, id(i + 1, j)) += 1.0 / (h * h);
      lap(k, id(i - 1, j)) += 1.0 / (h * h);
      lap(k, id(i, j + 1)) += 1.0 / (h * h);
      lap(k, id(i, j - 1)) += 1.0 / (h * h);
    }
  Eigen::VectorXd uv(n);
  for (int k = 0; k < n; ++k) uv(k) = u[static_cast<std::size_t>(k)];
  const Eigen::VectorXd lap_u = lap * uv;
  Eigen::MatrixXd K = -4.0 * h * h * lap;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    const double w = std::exp(2.0 * uv(k)) * h * h;
    const double R = -2.0 * std::exp(-2.0 * uv(k)) * lap_u(k);
    K(k, k) += R * w;
    M(k, k) = w;
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(K, M, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

/// A general symmetric metric E dx^2 + 2F dx dy + G dy^2 on a periodic grid.
struct GeneralMetric {
  rel::TorusGrid grid;
  rel::ScalarField E, F, G;
};

/// W(g, f, tau) for a general 2D metric with centered differences:
/// dV = sqrt(EG - F^2), |grad f|^2 = g^{ij} f_i f_j, and R = 2K with K from
/// the Brioschi formula.
inline double general_W(const GeneralMetric& m, const rel::ScalarField& f, double tau) {
  const auto& gr = m.grid;
  const double h1 = gr.h1(), h2 = gr.h2();
  auto at = [&](const rel::ScalarField& a, int i, int j) { return a(gr.wrap1(i), gr.wrap2(j)); };
  auto du = [&](const rel::ScalarField& a, int i, int j) { return (at(a, i + 1, j) - at(a, i - 1, j)) / (2 * h1); };
  auto dv = [&](const rel::ScalarField& a, int i, int j) { return (at(a, i, j + 1) - at(a, i, j - 1)) / (2 * h2); };
  auto duu = [&](const rel::ScalarField& a, int i, int j) {
    return (at(a, i + 1, j) - 2 * at(a, i, j) + at(a, i - 1, j)) / (h1 * h1);
  };
  auto dvv = [&](const rel::ScalarField& a, int i, int j) {
    return (at(a, i, j + 1) - 2 * at(a, i, j) + at(a, i, j - 1)) / (h2 * h2);
  };
  auto duv = [&](const rel::ScalarField& a, int i, int j) {
    return (at(a, i + 1, j + 1) - at(a, i + 1, j - 1) - at(a, i - 1, j + 1) + at(a, i - 1, j - 1)) / (4 * h1 * h2);
  };
  double sum = 0.0;
  for (int i = 0; i < gr.N1; ++i)
    for (int j = 0; j < gr.N2; ++j) {
      const double E = m.E(i, j), F = m.F(i, j), G = m.G(i, j);
      const double det = E * G - F * F;
      const double Eu = du(m.E, i, j), Ev = dv(m.E, i, j);
      const double Fu = du(m.F, i, j), Fv = dv(m.F, i, j);
      const double Gu = du(m.G, i, j), Gv = dv(m.G, i, j);
      Eigen::Matrix3d A;
      A << -0.5 * dvv(m.E, i, j) + duv(m.F, i, j) - 0.5 * duu(m.G, i, j), 0.5 * Eu, Fu - 0.5 * Ev,  //
          Fv - 0.5 * Gu, E, F,                                                                     //
          0.5 * Gv, F, G;
      Eigen::Matrix3d B;
      B << 0.0, 0.5 * Ev, 0.5 * Gu,  //
          0.5 * Ev, E, F,            //
          0.5 * Gu, F, G;
      const double R = 2.0 * (A.determinant() - B.determinant()) / (det * det);
      const double fu = du(f, i, j), fv = dv(f, i, j);
      const double grad2 = (G * fu * fu - 2.0 * F * fu * fv + E * fv * fv) / det;
      const double fval = f(i, j);
      sum += (tau * (R + grad2) + fval - 2.0) * std::exp(-fval) * std::sqrt(det) * h1 * h2;
    }
  return sum / (4.0 * pi * tau);
}

}  // namespace test
