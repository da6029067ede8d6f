#include "rel/manifold.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "rel/errors.hpp"

namespace rel {

// ---------------------------------------------------------------- ScalarField

ScalarField::ScalarField(int rows, int cols, double fill)
    : rows_(rows), cols_(cols), values_(static_cast<std::size_t>(rows) * cols, fill) {
  require(rows >= 0 && cols >= 0, "ScalarField: negative shape");
}

bool ScalarField::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double ScalarField::min() const {
  require(!values_.empty(), "ScalarField::min on empty field");
  return *std::min_element(values_.begin(), values_.end());
}

double ScalarField::max() const {
  require(!values_.empty(), "ScalarField::max on empty field");
  return *std::max_element(values_.begin(), values_.end());
}

double ScalarField::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double ScalarField::sum() const {
  double s = 0.0;
  for (double v : values_) s += v;
  return s;
}

ScalarField& ScalarField::operator+=(const ScalarField& rhs) {
  require(same_shape(rhs), "ScalarField: shape mismatch in +");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += rhs.values_[k];
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& rhs) {
  require(same_shape(rhs), "ScalarField: shape mismatch in -");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= rhs.values_[k];
  return *this;
}

ScalarField& ScalarField::operator*=(const ScalarField& rhs) {
  require(same_shape(rhs), "ScalarField: shape mismatch in *");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] *= rhs.values_[k];
  return *this;
}

ScalarField& ScalarField::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

ScalarField& ScalarField::operator+=(double s) {
  for (double& v : values_) v += s;
  return *this;
}

// ------------------------------------------------------------------ TorusGrid

TorusGrid TorusGrid::make(double L1, double L2, int N1, int N2) {
  require(std::isfinite(L1) && std::isfinite(L2) && L1 > 0.0 && L2 > 0.0,
          "TorusGrid: side lengths must be positive");
  require(N1 >= 8 && N2 >= 8, "TorusGrid: node counts must be at least 8");
  require(N1 % 2 == 0 && N2 % 2 == 0, "TorusGrid: node counts must be even");
  return TorusGrid{L1, L2, N1, N2};
}

// ---------------------------------------------------------------- MetricState

const TorusMetric& MetricState::torus() const {
  if (const auto* t = std::get_if<TorusMetric>(&rep_)) return *t;
  throw PreconditionError("metric is not a torus");
}

const SphereMetric& MetricState::sphere() const {
  if (const auto* s = std::get_if<SphereMetric>(&rep_)) return *s;
  throw PreconditionError("metric is not a sphere");
}

int MetricState::dimension() const noexcept {
  if (const auto* s = std::get_if<SphereMetric>(&rep_)) return s->n;
  return 2;
}

bool MetricState::matches(const ScalarField& f) const noexcept {
  if (const auto* t = std::get_if<TorusMetric>(&rep_)) {
    return f.rows() == t->grid.N1 && f.cols() == t->grid.N2;
  }
  return f.rows() == 1 && f.cols() == 1;
}

void MetricState::check_shape(const ScalarField& f, std::string_view what) const {
  if (!matches(f)) {
    throw PreconditionError(std::string(what) + ": field shape does not match the metric");
  }
}

ScalarField MetricState::constant_field(double value) const {
  if (is_torus()) {
    const auto& grid = torus().grid;
    return ScalarField(grid.N1, grid.N2, value);
  }
  return ScalarField::constant(value);
}

// ------------------------------------------------------------- SymTensorField

SymTensorField::SymTensorField(ScalarField t11, ScalarField t12, ScalarField t22)
    : t11_(std::move(t11)), t12_(std::move(t12)), t22_(std::move(t22)) {
  require(t11_.same_shape(t12_) && t11_.same_shape(t22_), "SymTensorField: component shapes differ");
}

SymTensorField SymTensorField::metric_multiple(double c) {
  SymTensorField t;
  t.t11_ = ScalarField::constant(c);
  t.metric_multiple_ = true;
  return t;
}

double SymTensorField::coefficient() const {
  require(metric_multiple_, "SymTensorField: not a multiple of the metric");
  return t11_[0];
}

bool SymTensorField::all_finite() const noexcept {
  return t11_.all_finite() && t12_.all_finite() && t22_.all_finite();
}

SymTensorField& SymTensorField::operator+=(const SymTensorField& rhs) {
  require(metric_multiple_ == rhs.metric_multiple_, "SymTensorField: mixed representations");
  t11_ += rhs.t11_;
  if (!metric_multiple_) {
    t12_ += rhs.t12_;
    t22_ += rhs.t22_;
  }
  return *this;
}

SymTensorField& SymTensorField::operator*=(double s) {
  t11_ *= s;
  t12_ *= s;
  t22_ *= s;
  return *this;
}

double SymTensorField::max_abs() const {
  return std::max({t11_.max_abs(), t12_.max_abs(), t22_.max_abs()});
}

// ----------------------------------------------------------------- operations

MetricState make_torus(double L1, double L2, int N1, int N2, ScalarField u_init) {
  TorusGrid grid = TorusGrid::make(L1, L2, N1, N2);
  require(u_init.rows() == N1 && u_init.cols() == N2, "make_torus: conformal factor shape mismatch");
  require(u_init.all_finite(), "make_torus: conformal factor is not finite");
  return MetricState(TorusMetric{grid, std::move(u_init)});
}

MetricState make_sphere(int n, double r) {
  require(n >= 2, "make_sphere: dimension must be at least 2");
  require(std::isfinite(r) && r > 0.0, "make_sphere: radius must be positive");
  return MetricState(SphereMetric{n, r});
}

double unit_sphere_volume(int n) {
  // |S^n| = 2 pi^{(n+1)/2} / Gamma((n+1)/2)
  const double a = 0.5 * (n + 1);
  return 2.0 * std::pow(std::numbers::pi, a) / std::tgamma(a);
}

double total_volume(const MetricState& g) {
  if (g.is_sphere()) {
    const auto& s = g.sphere();
    return unit_sphere_volume(s.n) * std::pow(s.r, s.n);
  }
  const auto& t = g.torus();
  const double dA = t.grid.cell_area();
  double vol = 0.0;
  for (double u : t.u.values()) vol += std::exp(2.0 * u) * dA;
  return vol;
}

double integrate(const ScalarField& phi, const MetricState& g) {
  g.check_shape(phi, "integrate");
  if (g.is_sphere()) return phi[0] * total_volume(g);
  const auto& t = g.torus();
  const double dA = t.grid.cell_area();
  double acc = 0.0;
  for (std::size_t k = 0; k < phi.size(); ++k) acc += phi[k] * (std::exp(2.0 * t.u[k]) * dA);
  return acc;
}

ScalarField volume_weights(const MetricState& g) {
  if (g.is_sphere()) return ScalarField::constant(total_volume(g));
  const auto& t = g.torus();
  const double dA = t.grid.cell_area();
  return t.u.map([dA](double u) { return std::exp(2.0 * u) * dA; });
}

MetricState scale_metric(const MetricState& g, double lambda) {
  require(std::isfinite(lambda) && lambda > 0.0, "scale_metric: lambda must be positive");
  if (g.is_sphere()) {
    const auto& s = g.sphere();
    return make_sphere(s.n, std::sqrt(lambda) * s.r);
  }
  const auto& t = g.torus();
  if (lambda == 1.0) return g;
  return MetricState(TorusMetric{t.grid, t.u + 0.5 * std::log(lambda)});
}

SymTensorField metric_tensor(const MetricState& g) {
  if (g.is_sphere()) return SymTensorField::metric_multiple(1.0);
  const auto& t = g.torus();
  ScalarField e2u = t.u.map([](double u) { return std::exp(2.0 * u); });
  return SymTensorField(e2u, t.grid.zeros(), e2u);
}

namespace {

double parse_double(std::string_view text, std::string_view context) {
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  while (first != last && *first == ' ') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw PreconditionError(std::string(context) + ": cannot parse number '" + std::string(text) + "'");
  }
  return value;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

}  // namespace

ScalarField conformal_preset(const TorusGrid& grid, std::string_view preset) {
  const auto parts = split(preset, ':');
  const auto name = parts.front();
  ScalarField u = grid.zeros();
  if (name == "flat" && parts.size() == 1) return u;

  require(parts.size() == 2, "conformal_preset: unknown preset '" + std::string(preset) + "'");
  const double eps = parse_double(parts[1], "conformal_preset");
  const double k1 = 2.0 * std::numbers::pi / grid.L1;
  const double k2 = 2.0 * std::numbers::pi / grid.L2;
  if (name == "sinx") {
    for (int i = 0; i < grid.N1; ++i)
      for (int j = 0; j < grid.N2; ++j) u(i, j) = eps * std::sin(k1 * grid.x(i));
  } else if (name == "sinxcosy") {
    for (int i = 0; i < grid.N1; ++i)
      for (int j = 0; j < grid.N2; ++j) u(i, j) = eps * std::sin(k1 * grid.x(i)) * std::cos(k2 * grid.y(j));
  } else {
    throw PreconditionError("conformal_preset: unknown preset '" + std::string(preset) + "'");
  }
  return u;
}

ScalarField load_conformal_csv(const std::string& path, int N1, int N2) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open conformal factor file '" + path + "'");
  ScalarField u(N1, N2);
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    require(row < N1, "load_conformal_csv: more than N1 rows in '" + path + "'");
    const auto cells = split(line, ',');
    require(static_cast<int>(cells.size()) == N2, "load_conformal_csv: row " + std::to_string(row) +
                                                      " does not have N2 entries in '" + path + "'");
    for (int j = 0; j < N2; ++j) u(row, j) = parse_double(cells[j], "load_conformal_csv");
    ++row;
  }
  require(row == N1, "load_conformal_csv: expected N1 rows in '" + path + "'");
  return u;
}

MetricState make_geometry(std::string_view preset, const TorusGrid& grid) {
  if (preset.starts_with("sphere")) {
    const auto parts = split(preset, ':');
    require(parts.size() == 3, "make_geometry: sphere preset must be 'sphere:<n>:<r>'");
    const double n = parse_double(parts[1], "make_geometry");
    require(n == std::floor(n), "make_geometry: sphere dimension must be an integer");
    return make_sphere(static_cast<int>(n), parse_double(parts[2], "make_geometry"));
  }
  ScalarField u = conformal_preset(grid, preset);
  return make_torus(grid.L1, grid.L2, grid.N1, grid.N2, std::move(u));
}

}  // namespace rel
