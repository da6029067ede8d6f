#include "rel/lab.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <numbers>
#include <sstream>

#include "rel/curvature.hpp"
#include "rel/diffeo.hpp"
#include "rel/errors.hpp"
#include "rel/format.hpp"

namespace rel {

namespace {

using json = nlohmann::ordered_json;

template <class T>
void read(const json& j, T& out, const std::string& key) {
  try {
    j.get_to(out);
  } catch (const json::exception&) {
    throw PreconditionError("config: wrong type for '" + key + "'");
  }
}

Check make_check(std::string name, bool ok, double value, double threshold, std::string detail = {}) {
  return Check{std::move(name), ok ? Outcome::pass : Outcome::fail, value, threshold, std::move(detail)};
}

double max_of(const std::vector<double>& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  return m;
}

std::vector<Check> gauss_bonnet_checks(const FlowTrajectory& traj) {
  std::vector<Check> checks;
  const MetricState& g0 = traj[0];
  if (g0.is_sphere() && g0.dimension() != 2) return checks;
  const double target = g0.is_torus() ? 0.0 : 8.0 * std::numbers::pi;
  const double tol = g0.is_torus() ? 1e-6 : 1e-10;
  double worst = 0.0;
  for (const auto& g : traj.states) worst = std::max(worst, std::abs(integrate(scalar_curvature(g), g) - target));
  checks.push_back(make_check("gauss_bonnet", worst < tol, worst, tol));
  return checks;
}

std::vector<Check> max_principle_checks(const FlowTrajectory& traj) {
  std::vector<Check> checks;
  if (!traj[0].is_torus()) return checks;
  constexpr double tol = 1e-14;
  double worst = 0.0;
  for (std::size_t k = 1; k < traj.size(); ++k) {
    const auto& a = traj[k - 1].torus().u;
    const auto& b = traj[k].torus().u;
    worst = std::max({worst, b.max() - a.max(), a.min() - b.min()});
  }
  checks.push_back(make_check("max_principle", worst <= tol, worst, tol, "growth of max u or decay of min u"));
  return checks;
}

}  // namespace

// ---------------------------------------------------------------- config

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw PreconditionError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw PreconditionError("config: top level must be an object");
  ExperimentConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "preset") read(v, c.preset, key);
    else if (key == "u_csv") read(v, c.u_csv, key);
    else if (key == "L1") read(v, c.L1, key);
    else if (key == "L2") read(v, c.L2, key);
    else if (key == "N1") read(v, c.N1, key);
    else if (key == "N2") read(v, c.N2, key);
    else if (key == "dt") read(v, c.dt, key);
    else if (key == "t1") read(v, c.t1, key);
    else if (key == "t0_prime") read(v, c.t0_prime, key);
    else if (key == "taus") read(v, c.taus, key);
    else if (key == "deltas") read(v, c.deltas, key);
    else if (key == "starts") read(v, c.mu.starts, key);
    else if (key == "max_iter") read(v, c.mu.max_iter, key);
    else if (key == "tol") read(v, c.mu.tol, key);
    else if (key == "seed") read(v, c.mu.seed, key);
    else if (key == "mu_samples") read(v, c.mu_samples, key);
    else if (key == "alpha") read(v, c.alpha, key);
    else if (key == "breather_t1") read(v, c.breather_t1, key);
    else if (key == "breather_t2") read(v, c.breather_t2, key);
    else if (key == "diffeo_t0") read(v, c.diffeo_t0, key);
    else if (key == "diffeo_t") read(v, c.diffeo_t, key);
    else if (key == "h_list") read(v, c.h_list, key);
    else if (key == "ode_dt") read(v, c.ode_dt, key);
    else if (key == "node") read(v, c.node, key);
    else if (key == "floor_tol") read(v, c.floor_tol, key);
    else if (key == "mass_tol") read(v, c.mass_tol, key);
    else if (key == "inequality_tol") read(v, c.inequality_tol, key);
    else if (key == "monotone_tol") read(v, c.monotone_tol, key);
    else if (key == "mu_tol") read(v, c.mu_tol, key);
    else if (key == "soliton_tol") read(v, c.soliton_tol, key);
    else if (key == "residual_tol") read(v, c.residual_tol, key);
    else if (key == "inverse_tol") read(v, c.inverse_tol, key);
    else if (key == "out") read(v, c.out, key);
    else throw PreconditionError("config: unknown key '" + key + "'");
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw PreconditionError("config: cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

namespace {

json config_json(const ExperimentConfig& c) {
  json j;
  j["preset"] = c.preset;
  j["u_csv"] = c.u_csv;
  j["L1"] = c.L1;
  j["L2"] = c.L2;
  j["N1"] = c.N1;
  j["N2"] = c.N2;
  j["dt"] = c.dt;
  j["t1"] = c.t1;
  j["t0_prime"] = c.t0_prime;
  j["taus"] = c.taus;
  j["deltas"] = c.deltas;
  j["starts"] = c.mu.starts;
  j["max_iter"] = c.mu.max_iter;
  j["tol"] = c.mu.tol;
  j["seed"] = c.mu.seed;
  j["mu_samples"] = c.mu_samples;
  j["alpha"] = c.alpha;
  j["breather_t1"] = c.breather_t1;
  j["breather_t2"] = c.breather_t2;
  j["diffeo_t0"] = c.diffeo_t0;
  j["diffeo_t"] = c.diffeo_t;
  j["h_list"] = c.h_list;
  j["ode_dt"] = c.ode_dt;
  j["node"] = c.node;
  j["floor_tol"] = c.floor_tol;
  j["mass_tol"] = c.mass_tol;
  j["inequality_tol"] = c.inequality_tol;
  j["monotone_tol"] = c.monotone_tol;
  j["mu_tol"] = c.mu_tol;
  j["soliton_tol"] = c.soliton_tol;
  j["residual_tol"] = c.residual_tol;
  j["inverse_tol"] = c.inverse_tol;
  j["out"] = c.out;
  return j;
}

}  // namespace

std::string config_to_json(const ExperimentConfig& cfg) { return config_json(cfg).dump(2); }

void validate(const ExperimentConfig& c) {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  require(positive(c.L1) && positive(c.L2), "config: L1 and L2 must be positive");
  require(c.N1 >= 8 && c.N2 >= 8 && c.N1 % 2 == 0 && c.N2 % 2 == 0, "config: N1 and N2 must be even and >= 8");
  require(positive(c.dt), "config: dt must be positive");
  require(positive(c.t1) && c.t1 < c.t0_prime, "config: need 0 < t1 < t0_prime");
  require(!c.taus.empty() && std::all_of(c.taus.begin(), c.taus.end(), positive), "config: taus must be positive");
  require(!c.deltas.empty() && std::all_of(c.deltas.begin(), c.deltas.end(), [](double d) { return d > 0.0 && d < 1.0; }),
          "config: deltas must lie in (0, 1)");
  require(c.mu.starts > 0 && c.mu.max_iter > 0 && positive(c.mu.tol), "config: optimizer options must be positive");
  require(c.mu_samples > 0, "config: mu_samples must be positive");
  require(c.alpha > 0.0 && c.alpha < 1.0, "config: alpha must lie in (0, 1)");
  require(c.breather_t1 >= 0.0 && c.breather_t1 < c.breather_t2, "config: need 0 <= breather_t1 < breather_t2");
  require(c.diffeo_t0 >= 0.0 && c.diffeo_t0 < c.diffeo_t && c.diffeo_t < c.t1, "config: need 0 <= diffeo_t0 < diffeo_t < t1");
  require(c.h_list.size() >= 3, "config: h_list needs at least three entries");
  for (std::size_t k = 0; k < c.h_list.size(); ++k) {
    require(positive(c.h_list[k]) && (k == 0 || c.h_list[k] < c.h_list[k - 1]), "config: h_list must be positive and decreasing");
  }
  require(c.diffeo_t + c.h_list.front() <= c.t1 + 1e-12, "config: diffeo_t + max(h_list) must not exceed t1");
  require(positive(c.ode_dt), "config: ode_dt must be positive");
  for (double tol : {c.floor_tol, c.mass_tol, c.inequality_tol, c.monotone_tol, c.mu_tol, c.soliton_tol, c.residual_tol,
                     c.inverse_tol}) {
    require(positive(tol), "config: tolerances must be positive");
  }
}

MetricState initial_metric(const ExperimentConfig& cfg) {
  const TorusGrid grid = TorusGrid::make(cfg.L1, cfg.L2, cfg.N1, cfg.N2);
  if (!cfg.u_csv.empty()) return make_torus(cfg.L1, cfg.L2, cfg.N1, cfg.N2, load_conformal_csv(cfg.u_csv, cfg.N1, cfg.N2));
  return make_geometry(cfg.preset, grid);
}

// ---------------------------------------------------------------- verdicts

const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::pass: return "pass";
    case Outcome::fail: return "fail";
    case Outcome::inconclusive: return "inconclusive";
    case Outcome::soliton: return "soliton";
  }
  return "fail";
}

Outcome overall(const std::vector<Check>& checks) {
  bool inconclusive = false;
  for (const auto& c : checks) {
    if (c.outcome == Outcome::fail) return Outcome::fail;
    if (c.outcome == Outcome::inconclusive) inconclusive = true;
  }
  return inconclusive ? Outcome::inconclusive : Outcome::pass;
}

int exit_code(Outcome o) {
  switch (o) {
    case Outcome::fail: return 1;
    case Outcome::inconclusive: return 3;
    default: return 0;
  }
}

// ---------------------------------------------------------------- experiments

CoupledRun run_coupled(const ExperimentConfig& cfg) {
  validate(cfg);
  CoupledRun run;
  run.traj = evolve(initial_metric(cfg), cfg.t1, cfg.dt, cfg.t0_prime);
  const std::size_t K = run.traj.size() - 1;
  const double tau1 = run.traj.tau(K);
  run.mu_t1 = mu_estimate(run.traj[K], tau1, cfg.mu);
  const ScalarField H0 = f_to_H(run.mu_t1.minimizer_f, tau1, run.traj[K].dimension());
  run.sol = solve_conjugate_heat(run.traj, H0, cfg.floor_tol);
  return run;
}

EntropyReport monotonicity_report(const ExperimentConfig& cfg, const CoupledRun& run) {
  const FlowTrajectory& traj = run.traj;
  const std::size_t K = traj.size() - 1;
  EntropyReport rep;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const MetricState& g = traj[k];
    const ScalarField R = scalar_curvature(g);
    EntropyRow row;
    row.t = traj.time(k);
    row.tau = traj.tau(k);
    row.W = W_functional(g, run.sol.f[k], row.tau);
    row.mass = mass(run.sol, traj, k);
    row.constraint = constraint_value(run.sol.f[k], g, row.tau);
    row.vol = total_volume(g);
    row.Rmin = R.min();
    row.Rmax = R.max();
    rep.production.push_back(entropy_production(g, run.sol.f[k], row.tau));
    if (k > 0) row.E_cum = rep.rows.back().E_cum + 0.5 * traj.dt * (rep.production[k - 1] + rep.production[k]);
    rep.rows.push_back(row);
  }

  double min_increment = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k <= K; ++k) min_increment = std::min(min_increment, rep.rows[k].W - rep.rows[k - 1].W);
  if (K == 0) min_increment = 0.0;
  rep.checks.push_back(make_check("W_nondecreasing", min_increment >= -cfg.monotone_tol, min_increment, -cfg.monotone_tol));

  double worst_match = 0.0;
  for (std::size_t k = 1; k + 1 <= K; ++k) {
    const double dW = (rep.rows[k + 1].W - rep.rows[k - 1].W) / (2.0 * traj.dt);
    const double allowed = std::max(1e-3, 0.05 * std::abs(rep.production[k]));
    worst_match = std::max(worst_match, std::abs(dW - rep.production[k]) / allowed);
  }
  rep.checks.push_back(make_check("dWdt_matches_production", worst_match <= 1.0, worst_match, 1.0,
                                  "max |dW/dt - production| / max(1e-3, 5% production)"));

  double worst_gap = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k <= K; ++k) {
    const double E = rep.rows[K].E_cum - rep.rows[k].E_cum;
    worst_gap = std::min(worst_gap, rep.rows[K].W - rep.rows[k].W - E);
  }
  rep.checks.push_back(make_check("entropy_inequality", worst_gap >= -cfg.inequality_tol, worst_gap, -cfg.inequality_tol,
                                  "min over t of W(t1) - W(t) - E(t,t1)"));

  double mass_drift = 0.0, constraint_drift = 0.0;
  for (const auto& row : rep.rows) {
    mass_drift = std::max(mass_drift, std::abs(row.mass / rep.rows[K].mass - 1.0));
    constraint_drift = std::max(constraint_drift, std::abs(row.constraint / rep.rows[K].constraint - 1.0));
  }
  rep.checks.push_back(make_check("mass_drift", mass_drift < cfg.mass_tol, mass_drift, cfg.mass_tol));
  rep.checks.push_back(make_check("constraint_drift", constraint_drift < cfg.mass_tol, constraint_drift, cfg.mass_tol));

  const PositivityReport pos = positivity_floor(run.sol, traj, cfg.floor_tol);
  rep.checks.push_back(make_check("positivity_floor", pos.pass, pos.min_margin, -cfg.floor_tol));

  const double rise = rep.rows[K].W - rep.rows[0].W;
  if (max_of(rep.production) < cfg.soliton_tol) {
    rep.checks.push_back(Check{"W_strictly_increasing", Outcome::soliton, rise, 0.0, "entropy production vanishes"});
  } else {
    rep.checks.push_back(make_check("W_strictly_increasing", rise > 0.0, rise, 0.0));
  }
  return rep;
}

EntropyReport run_monotonicity(const ExperimentConfig& cfg) { return monotonicity_report(cfg, run_coupled(cfg)); }

EntropyReport run_mu_monotonicity(const ExperimentConfig& cfg) {
  const CoupledRun run = run_coupled(cfg);
  return mu_monotonicity_report(cfg, run, monotonicity_report(cfg, run));
}

EntropyReport mu_monotonicity_report(const ExperimentConfig& cfg, const CoupledRun& run, const EntropyReport& full) {
  EntropyReport rep;
  for (int s = 1; s <= cfg.mu_samples; ++s) {
    const std::size_t k = run.traj.nearest_index(cfg.t1 * s / cfg.mu_samples);
    EntropyRow row = full.rows[k];
    row.mu = mu_estimate(run.traj[k], row.tau, cfg.mu).value;
    rep.rows.push_back(row);
    rep.production.push_back(full.production[k]);
  }

  double min_step = std::numeric_limits<double>::infinity(), excess = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < rep.rows.size(); ++s) {
    if (s > 0) min_step = std::min(min_step, *rep.rows[s].mu - *rep.rows[s - 1].mu);
    excess = std::max(excess, *rep.rows[s].mu - rep.rows[s].W);
  }
  if (rep.rows.size() < 2) min_step = 0.0;
  rep.checks.push_back(make_check("mu_nondecreasing", min_step >= -cfg.mu_tol, min_step, -cfg.mu_tol));
  rep.checks.push_back(make_check("mu_below_W", excess <= cfg.mu_tol, excess, cfg.mu_tol, "max of mu - W"));

  const double rise = *rep.rows.back().mu - *rep.rows.front().mu;
  if (max_of(full.production) < cfg.soliton_tol) {
    rep.checks.push_back(Check{"mu_total_increase", std::abs(rise) < cfg.mu_tol ? Outcome::soliton : Outcome::fail, rise,
                               cfg.mu_tol, "soliton: mu constant"});
  } else {
    rep.checks.push_back(make_check("mu_total_increase", rise >= 10.0 * cfg.mu_tol, rise, 10.0 * cfg.mu_tol));
  }
  return rep;
}

double breather_fixed_point(double alpha, double t1, double t2) {
  require(alpha > 0.0 && alpha < 1.0, "breather_fixed_point: alpha must lie in (0, 1)");
  require(t1 < t2, "breather_fixed_point: need t1 < t2");
  return alpha * (t2 - t1) / (1.0 - alpha);
}

BreatherReport breather_contradiction(const ExperimentConfig& cfg, double alpha, double t1, double t2) {
  BreatherReport rep;
  rep.tau = breather_fixed_point(alpha, t1, t2);
  rep.fixed_point_defect = std::abs(rep.tau / alpha - (t2 - t1) - rep.tau) / rep.tau;

  const FlowTrajectory traj = evolve(initial_metric(cfg), t2, cfg.dt, t2 + rep.tau);
  const MetricState& g1 = traj[traj.index_of(t1)];
  const MetricState& g2 = traj[traj.index_of(t2)];
  rep.mu_scaled_t1 = mu_estimate(scale_metric(g1, alpha), rep.tau, cfg.mu).value;
  const MuResult at_t1 = mu_estimate(g1, rep.tau / alpha, cfg.mu);
  rep.mu_t1 = at_t1.value;
  rep.mu_t2 = mu_estimate(g2, rep.tau, cfg.mu).value;
  rep.scaling_gap = std::abs(rep.mu_scaled_t1 - rep.mu_t1);
  rep.margin = rep.mu_t2 - rep.mu_t1;
  rep.production = entropy_production(g1, at_t1.minimizer_f, rep.tau / alpha);

  rep.checks.push_back(make_check("fixed_point", rep.fixed_point_defect < 1e-15, rep.fixed_point_defect, 1e-15,
                                  "|tau/alpha - (t2-t1) - tau| / tau"));
  rep.checks.push_back(make_check("scaling_leg", rep.scaling_gap < cfg.mu_tol, rep.scaling_gap, cfg.mu_tol));
  Check margin{"breather_margin", Outcome::pass, rep.margin, cfg.mu_tol, "mu(g(t2),tau) - mu(g(t1),tau/alpha)"};
  if (rep.production < cfg.soliton_tol) {
    margin.outcome = Outcome::soliton;
    margin.detail = "soliton: breather equality attained";
  } else if (rep.margin > cfg.mu_tol) {
    margin.outcome = Outcome::pass;
  } else if (rep.margin < -cfg.mu_tol) {
    margin.outcome = Outcome::fail;
  } else {
    margin.outcome = Outcome::inconclusive;
  }
  rep.checks.push_back(margin);
  return rep;
}

// ---------------------------------------------------------------- commands

Report to_report(const EntropyReport& rep, const std::string& command, const ExperimentConfig& cfg) {
  Report out;
  out.command = command;
  out.config = cfg;
  Table entropy{"entropy", {"t", "tau", "W", "mu", "E_cum", "mass", "constraint", "vol", "Rmin", "Rmax"}, {}};
  Table mass{"mass", {"t", "mass", "constraint"}, {}};
  Table production{"production", {"t", "production"}, {}};
  for (std::size_t k = 0; k < rep.rows.size(); ++k) {
    const auto& r = rep.rows[k];
    entropy.rows.push_back({r.t, r.tau, r.W, r.mu, r.E_cum, r.mass, r.constraint, r.vol, r.Rmin, r.Rmax});
    mass.rows.push_back({r.t, r.mass, r.constraint});
    production.rows.push_back({r.t, rep.production[k]});
  }
  out.tables = {std::move(entropy), std::move(mass), std::move(production)};
  out.checks = rep.checks;
  return out;
}

Report flow_command(const ExperimentConfig& cfg) {
  validate(cfg);
  const FlowTrajectory traj = evolve(initial_metric(cfg), cfg.t1, cfg.dt, cfg.t0_prime);
  Report out;
  out.command = "flow";
  out.config = cfg;
  Table t{"trajectory", {"step", "t", "tau", "vol", "Rmin", "Rmax"}, {}};
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const ScalarField R = scalar_curvature(traj[k]);
    t.rows.push_back({static_cast<double>(k), traj.time(k), traj.tau(k), total_volume(traj[k]), R.min(), R.max()});
  }
  out.tables.push_back(std::move(t));
  for (auto& c : gauss_bonnet_checks(traj)) out.checks.push_back(std::move(c));
  for (auto& c : max_principle_checks(traj)) out.checks.push_back(std::move(c));
  return out;
}

Report mu_scan_command(const ExperimentConfig& cfg) {
  validate(cfg);
  const MetricState g = initial_metric(cfg);
  Report out;
  out.command = "mu-scan";
  out.config = cfg;
  Table t{"mu_scan", {"tau", "mu", "grad_residual", "starts_used"}, {}};
  bool finite = true;
  for (double tau : cfg.taus) {
    const MuResult m = mu_estimate(g, tau, cfg.mu);
    finite = finite && std::isfinite(m.value) && std::isfinite(m.grad_residual);
    t.rows.push_back({tau, m.value, m.grad_residual, static_cast<double>(m.starts_used)});
  }
  out.tables.push_back(std::move(t));
  out.checks.push_back(make_check("mu_finite", finite, finite ? 1.0 : 0.0, 1.0));
  return out;
}

Report monotonicity_command(const ExperimentConfig& cfg) {
  const CoupledRun run = run_coupled(cfg);
  const EntropyReport full = monotonicity_report(cfg, run);
  Report out = to_report(mu_monotonicity_report(cfg, run, full), "monotonicity", cfg);
  Report rows = to_report(full, "monotonicity", cfg);
  out.tables.resize(1);
  out.tables.front().name = "mu_samples";
  for (auto& t : rows.tables) out.tables.push_back(std::move(t));
  for (const auto& c : full.checks) out.checks.push_back(c);
  return out;
}

Report diffeo_command(const ExperimentConfig& cfg) {
  const CoupledRun run = run_coupled(cfg);
  require(run.traj[0].is_torus(), "diffeo-verify: flow maps are defined on the torus only");
  const auto& grid = run.traj[0].torus().grid;
  const int i = cfg.node[0] < 0 ? grid.N1 / 8 : cfg.node[0];
  const int j = cfg.node[1] < 0 ? grid.N2 / 8 : cfg.node[1];

  Report out;
  out.command = "diffeo-verify";
  out.config = cfg;

  const DeviationStudy study = lemma13_orders(run.traj, run.sol.f, cfg.diffeo_t, i, j, cfg.h_list);
  Table conv{"convergence", {"h", "e_norm", "E_val", "slope_e", "slope_E"}, {}};
  for (const auto& r : study.records) conv.rows.push_back({r.h, r.e_norm, r.E_val, study.slope_e, study.slope_E});
  out.tables.push_back(std::move(conv));
  auto slope_check = [&](const char* name, const std::optional<double>& slope, double bound) {
    if (!slope) return Check{name, Outcome::pass, 0.0, bound, "deviation identically zero"};
    return make_check(name, *slope >= bound, *slope, bound);
  };
  out.checks.push_back(slope_check("slope_e", study.slope_e, 0.8));
  out.checks.push_back(slope_check("slope_E", study.slope_E, 1.7));

  const GradientHistory hist(run.traj, run.sol.f);
  const double defect = inverse_defect(hist, cfg.diffeo_t0, cfg.diffeo_t, cfg.ode_dt);
  out.checks.push_back(make_check("inverse_defect", defect < cfg.inverse_tol, defect, cfg.inverse_tol));
  const double det = integrate_flow(hist, cfg.diffeo_t0, cfg.diffeo_t, cfg.ode_dt).min_jacobian_det();
  out.checks.push_back(make_check("jacobian_positive", det > 0.0, det, 0.0));

  // Joint refinement: the configured run against one with half the nodes and twice the step.
  const double residual = lemma14_residual(run.traj, run.sol.f, cfg.diffeo_t0, cfg.diffeo_t, cfg.dt);
  Table res{"residual", {"h", "dt", "residual"}, {}};
  if (grid.N1 >= 16 && grid.N2 >= 16 && grid.N1 % 4 == 0 && grid.N2 % 4 == 0) {
    ExperimentConfig coarse = cfg;
    coarse.N1 /= 2;
    coarse.N2 /= 2;
    coarse.dt *= 2.0;
    const CoupledRun crun = run_coupled(coarse);
    const double cres = lemma14_residual(crun.traj, crun.sol.f, cfg.diffeo_t0, cfg.diffeo_t, coarse.dt);
    res.rows.push_back({2.0 * std::min(grid.h1(), grid.h2()), coarse.dt, cres});
    const double order = std::log2(cres / residual);
    out.checks.push_back(make_check("lie_derivative_order", order >= 1.0, order, 1.0, "joint (h, dt) halving"));
  }
  res.rows.push_back({std::min(grid.h1(), grid.h2()), cfg.dt, residual});
  out.tables.push_back(std::move(res));
  out.checks.push_back(make_check("lie_derivative_residual", residual < cfg.residual_tol, residual, cfg.residual_tol));
  return out;
}

Report breather_command(const ExperimentConfig& cfg) {
  validate(cfg);
  const BreatherReport b = breather_contradiction(cfg, cfg.alpha, cfg.breather_t1, cfg.breather_t2);
  Report out;
  out.command = "breather";
  out.config = cfg;
  Table t{"breather", {"alpha", "t1", "t2", "tau", "mu_scaled_t1", "mu_t1", "mu_t2", "scaling_gap", "margin", "production"}, {}};
  t.rows.push_back({cfg.alpha, cfg.breather_t1, cfg.breather_t2, b.tau, b.mu_scaled_t1, b.mu_t1, b.mu_t2, b.scaling_gap,
                    b.margin, b.production});
  out.tables.push_back(std::move(t));
  out.checks = b.checks;
  return out;
}

Report bound_check_command(const ExperimentConfig& cfg) {
  validate(cfg);
  const MetricState g = initial_metric(cfg);
  Report out;
  out.command = "bound-check";
  out.config = cfg;
  Table t{"bound_check", {"tau", "delta", "lhs", "rhs", "slack"}, {}};
  double worst = std::numeric_limits<double>::infinity();
  std::string failing;
  for (double tau : cfg.taus) {
    const ScalarField f = mu_estimate(g, tau, cfg.mu).minimizer_f;
    for (double delta : cfg.deltas) {
      const BoundReport b = bound_check(g, f, tau, delta);
      t.rows.push_back({tau, delta, b.lhs, b.rhs, b.slack});
      worst = std::min(worst, b.slack);
      // Equality cases are decided at roundoff level.
      if (b.slack < -1e-12 * (1.0 + std::abs(b.lhs))) {
        failing += (failing.empty() ? "" : " ") + std::string("tau=") + format_double(tau) + ",delta=" + format_double(delta);
      }
    }
  }
  out.tables.push_back(std::move(t));
  out.checks.push_back(make_check("slack_nonnegative", failing.empty(), worst, 0.0, failing.empty() ? "" : "negative at " + failing));
  return out;
}

// ---------------------------------------------------------------- output

void emit_report(const Report& report, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir + "': " + ec.message());

  json tables = json::object();
  for (const auto& t : report.tables) {
    const std::string file = t.name + ".csv";
    std::ofstream out(std::filesystem::path(dir) / file);
    if (!out) throw IoError("cannot write '" + file + "' in '" + dir + "'");
    for (std::size_t c = 0; c < t.columns.size(); ++c) out << (c ? "," : "") << t.columns[c];
    out << '\n';
    for (const auto& row : t.rows) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c) out << ',';
        if (row[c]) out << format_double(*row[c]);
      }
      out << '\n';
    }
    if (!out) throw IoError("write failed for '" + file + "'");
    tables[t.name] = json{{"file", file}, {"rows", t.rows.size()}};
  }

  const Outcome verdict = overall(report.checks);
  json summary;
  summary["command"] = report.command;
  summary["verdict"] = to_string(verdict);
  summary["exit_code"] = exit_code(verdict);
  json checks = json::array();
  for (const auto& c : report.checks) {
    checks.push_back(json{{"name", c.name},
                          {"outcome", to_string(c.outcome)},
                          {"value", c.value},
                          {"threshold", c.threshold},
                          {"detail", c.detail}});
  }
  summary["checks"] = std::move(checks);
  json scalars = json::object();
  for (const auto& [k, v] : report.scalars) scalars[k] = v;
  summary["scalars"] = std::move(scalars);
  summary["tables"] = std::move(tables);
  summary["config"] = report.config ? config_json(*report.config) : json(nullptr);

  std::ofstream out(std::filesystem::path(dir) / "summary.json");
  if (!out) throw IoError("cannot write summary.json in '" + dir + "'");
  out << summary.dump(2) << '\n';
  if (!out) throw IoError("write failed for summary.json");
}

}  // namespace rel
