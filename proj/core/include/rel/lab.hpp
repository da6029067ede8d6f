#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rel/conjugate.hpp"
#include "rel/entropy.hpp"
#include "rel/flow.hpp"
#include "rel/manifold.hpp"

namespace rel {

struct ExperimentConfig {
  // Geometry: a preset name, or a conformal factor CSV when `u_csv` is set.
  std::string preset = "sinx:0.1";
  std::string u_csv;
  double L1 = 1.0;
  double L2 = 1.0;
  int N1 = 64;
  int N2 = 64;

  // Flow ladder and the backward time tau = t0_prime - t.
  double dt = 1e-4;
  double t1 = 0.05;
  double t0_prime = 0.1;

  // Entropy scans.
  std::vector<double> taus = {0.1, 1.0, 10.0};
  std::vector<double> deltas = {0.1};
  MuOptions mu;
  int mu_samples = 8;

  // Breather test.
  double alpha = 0.5;
  double breather_t1 = 0.01;
  double breather_t2 = 0.03;

  // Flow-map verification.
  double diffeo_t0 = 0.01;
  double diffeo_t = 0.02;
  std::vector<double> h_list = {1e-2, 3e-3, 1e-3, 3e-4, 1e-4};
  double ode_dt = 1e-3;
  std::array<int, 2> node = {-1, -1};  // -1 selects (N1/8, N2/8)

  // Verdict tolerances.
  double floor_tol = 1e-8;
  double mass_tol = 1e-4;
  double inequality_tol = 1e-4;
  double monotone_tol = 1e-12;
  double mu_tol = 1e-3;
  double soliton_tol = 1e-10;
  double residual_tol = 1e-2;
  double inverse_tol = 1e-6;

  std::string out = "out";
};

/// Parses a JSON object whose keys mirror ExperimentConfig; unknown keys are rejected.
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& cfg);
/// Throws PreconditionError on an inconsistent configuration.
void validate(const ExperimentConfig& cfg);

MetricState initial_metric(const ExperimentConfig& cfg);

enum class Outcome { pass, fail, inconclusive, soliton };
const char* to_string(Outcome o);

struct Check {
  std::string name;
  Outcome outcome = Outcome::pass;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct EntropyRow {
  double t = 0.0;
  double tau = 0.0;
  double W = 0.0;
  std::optional<double> mu;
  double E_cum = 0.0;
  double mass = 0.0;
  double constraint = 0.0;
  double vol = 0.0;
  double Rmin = 0.0;
  double Rmax = 0.0;
};

/// Rows of the coupled flow plus verdicts. `production` is aligned with `rows`.
struct EntropyReport {
  std::vector<EntropyRow> rows;
  std::vector<double> production;
  std::vector<Check> checks;
};

/// A CSV table; empty cells are written for missing values.
struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::optional<double>>> rows;
};

/// Everything a subcommand emits: CSV tables plus summary.json.
struct Report {
  std::string command;
  std::vector<Table> tables;
  std::vector<Check> checks;
  std::vector<std::pair<std::string, double>> scalars;
  std::optional<ExperimentConfig> config;
};

/// fail > inconclusive > pass; soliton counts as pass.
Outcome overall(const std::vector<Check>& checks);

/// Exit code for a verdict: 0 pass, 1 fail, 3 inconclusive.
int exit_code(Outcome o);

/// Flow + minimizer at t1 + conjugate heat solve + W and entropy production
/// at every stored time.
struct CoupledRun {
  FlowTrajectory traj;
  ConjugateSolution sol;
  MuResult mu_t1;
};
CoupledRun run_coupled(const ExperimentConfig& cfg);

EntropyReport run_monotonicity(const ExperimentConfig& cfg);
EntropyReport monotonicity_report(const ExperimentConfig& cfg, const CoupledRun& run);

/// mu(g(t), t0_prime - t) at `mu_samples` evenly spaced times in (0, t1],
/// each rounded to the nearest stored time.
EntropyReport run_mu_monotonicity(const ExperimentConfig& cfg);
EntropyReport mu_monotonicity_report(const ExperimentConfig& cfg, const CoupledRun& run, const EntropyReport& full);

/// tau = alpha (t2 - t1) / (1 - alpha).
double breather_fixed_point(double alpha, double t1, double t2);

struct BreatherReport {
  double tau = 0.0;
  double fixed_point_defect = 0.0;  // |tau/alpha - (t2 - t1) - tau| / tau
  double mu_scaled_t1 = 0.0;        // mu(alpha g(t1), tau)
  double mu_t1 = 0.0;               // mu(g(t1), tau/alpha)
  double mu_t2 = 0.0;               // mu(g(t2), tau)
  double scaling_gap = 0.0;
  double margin = 0.0;              // mu_t2 - mu_t1
  double production = 0.0;          // entropy production at (g(t1), f_min, tau/alpha)
  std::vector<Check> checks;
};
BreatherReport breather_contradiction(const ExperimentConfig& cfg, double alpha, double t1, double t2);

/// Subcommand drivers.
Report flow_command(const ExperimentConfig& cfg);
Report mu_scan_command(const ExperimentConfig& cfg);
Report monotonicity_command(const ExperimentConfig& cfg);
Report diffeo_command(const ExperimentConfig& cfg);
Report breather_command(const ExperimentConfig& cfg);
Report bound_check_command(const ExperimentConfig& cfg);

Report to_report(const EntropyReport& rep, const std::string& command, const ExperimentConfig& cfg);

/// Writes every table as <dir>/<name>.csv and the verdicts to <dir>/summary.json.
/// Output is a pure function of the report.
void emit_report(const Report& report, const std::string& dir);

}  // namespace rel
