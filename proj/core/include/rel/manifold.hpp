#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace rel {

/// Real values on the nodes of a model manifold.
///
/// Torus fields are N1 x N2, stored row-major with the first index along x.
/// Sphere fields are spatially constant and stored as a single 1 x 1 value.
class ScalarField {
 public:
  ScalarField() = default;
  ScalarField(int rows, int cols, double fill = 0.0);
  static ScalarField constant(double value) { return ScalarField(1, 1, value); }

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double& operator()(int i, int j) { return values_[static_cast<std::size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const { return values_[static_cast<std::size_t>(i) * cols_ + j]; }
  double& operator[](std::size_t k) { return values_[k]; }
  double operator[](std::size_t k) const { return values_[k]; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  bool same_shape(const ScalarField& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool all_finite() const noexcept;
  double min() const;
  double max() const;
  double max_abs() const;
  double sum() const;

  template <class F>
  ScalarField map(F&& fn) const {
    ScalarField out(rows_, cols_);
    for (std::size_t k = 0; k < values_.size(); ++k) out.values_[k] = fn(values_[k]);
    return out;
  }

  ScalarField& operator+=(const ScalarField& rhs);
  ScalarField& operator-=(const ScalarField& rhs);
  ScalarField& operator*=(const ScalarField& rhs);
  ScalarField& operator*=(double s);
  ScalarField& operator+=(double s);

  friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
  friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
  friend ScalarField operator*(ScalarField a, const ScalarField& b) { return a *= b; }
  friend ScalarField operator*(ScalarField a, double s) { return a *= s; }
  friend ScalarField operator*(double s, ScalarField a) { return a *= s; }
  friend ScalarField operator+(ScalarField a, double s) { return a += s; }

  bool operator==(const ScalarField&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> values_;
};

/// Periodic node-centered grid on [0,L1) x [0,L2). Node (i,j) sits at (i*h1, j*h2).
struct TorusGrid {
  double L1 = 1.0;
  double L2 = 1.0;
  int N1 = 0;
  int N2 = 0;

  static TorusGrid make(double L1, double L2, int N1, int N2);

  double h1() const noexcept { return L1 / N1; }
  double h2() const noexcept { return L2 / N2; }
  double cell_area() const noexcept { return h1() * h2(); }
  std::size_t nodes() const noexcept { return static_cast<std::size_t>(N1) * N2; }
  double x(int i) const noexcept { return i * h1(); }
  double y(int j) const noexcept { return j * h2(); }
  int wrap1(int i) const noexcept { return ((i % N1) + N1) % N1; }
  int wrap2(int j) const noexcept { return ((j % N2) + N2) % N2; }
  ScalarField zeros() const { return ScalarField(N1, N2); }

  bool operator==(const TorusGrid&) const = default;
};

/// g = e^{2u} (dx^2 + dy^2) on a flat torus.
struct TorusMetric {
  TorusGrid grid;
  ScalarField u;
};

/// Round metric of radius r on S^n.
struct SphereMetric {
  int n = 2;
  double r = 1.0;
};

/// A metric on one of the two model families. Immutable value type.
class MetricState {
 public:
  explicit MetricState(TorusMetric t) : rep_(std::move(t)) {}
  explicit MetricState(SphereMetric s) : rep_(s) {}

  bool is_torus() const noexcept { return std::holds_alternative<TorusMetric>(rep_); }
  bool is_sphere() const noexcept { return std::holds_alternative<SphereMetric>(rep_); }
  const TorusMetric& torus() const;
  const SphereMetric& sphere() const;

  /// Manifold dimension n (2 for the torus).
  int dimension() const noexcept;

  /// True when `f` has the node layout of this metric.
  bool matches(const ScalarField& f) const noexcept;
  /// Throws PreconditionError when `f` does not match.
  void check_shape(const ScalarField& f, std::string_view what) const;

  ScalarField constant_field(double value) const;

 private:
  std::variant<TorusMetric, SphereMetric> rep_;
};

/// Symmetric 2-tensor on the nodes. Only T11, T12, T22 are stored.
///
/// On the sphere every tensor is a multiple c*g of the metric; `t11` then
/// holds the 1 x 1 coefficient c and the other components are unused.
class SymTensorField {
 public:
  SymTensorField() = default;
  SymTensorField(ScalarField t11, ScalarField t12, ScalarField t22);
  static SymTensorField metric_multiple(double c);

  bool is_metric_multiple() const noexcept { return metric_multiple_; }
  double coefficient() const;

  const ScalarField& t11() const noexcept { return t11_; }
  const ScalarField& t12() const noexcept { return t12_; }
  const ScalarField& t22() const noexcept { return t22_; }

  bool all_finite() const noexcept;

  SymTensorField& operator+=(const SymTensorField& rhs);
  SymTensorField& operator*=(double s);
  friend SymTensorField operator+(SymTensorField a, const SymTensorField& b) { return a += b; }
  friend SymTensorField operator-(SymTensorField a, SymTensorField b) {
    b *= -1.0;
    return a += b;
  }
  friend SymTensorField operator*(double s, SymTensorField a) { return a *= s; }

  /// Largest absolute component over all nodes.
  double max_abs() const;

 private:
  ScalarField t11_, t12_, t22_;
  bool metric_multiple_ = false;
};

MetricState make_torus(double L1, double L2, int N1, int N2, ScalarField u_init);
MetricState make_sphere(int n, double r);

/// Volume of the unit round sphere S^n.
double unit_sphere_volume(int n);

double total_volume(const MetricState& g);

/// Riemann sum of phi dV on the torus, phi * Vol on the sphere.
double integrate(const ScalarField& phi, const MetricState& g);

/// Quadrature weights e^{2u} h1 h2 (torus) or Vol (sphere), so that
/// integrate(phi, g) == sum_k phi[k] * w[k].
ScalarField volume_weights(const MetricState& g);

/// The metric lambda * g.
MetricState scale_metric(const MetricState& g, double lambda);

/// The metric as a tensor field: e^{2u} delta on the torus, 1*g on the sphere.
SymTensorField metric_tensor(const MetricState& g);

/// Conformal factor from a named preset: "flat", "sinx:<eps>", "sinxcosy:<eps>".
ScalarField conformal_preset(const TorusGrid& grid, std::string_view preset);

/// Conformal factor from a CSV file of N1 rows with N2 comma-separated values.
ScalarField load_conformal_csv(const std::string& path, int N1, int N2);

/// Geometry from a preset. Torus presets use `grid`; "sphere:<n>:<r>" ignores it.
MetricState make_geometry(std::string_view preset, const TorusGrid& grid);

}  // namespace rel
