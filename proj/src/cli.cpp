#include "gradctrl/cli.hpp"

#include <filesystem>
#include <iostream>
#include <random>

#include "CLI11.hpp"
#include "gradctrl/config.hpp"
#include "gradctrl/io.hpp"
#include "json.hpp"

namespace gradctrl {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CommonFlags {
  std::string config_path;
  std::string out_dir = "out";
  int64_t seed = -1;  // >= 0 overrides the config seed
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "problem configuration (JSON)")
      ->required();
  cmd->add_option("--out", flags.out_dir, "output directory");
  cmd->add_option("--seed", flags.seed, "override the config seed");
}

RunConfig load(const CommonFlags& flags) {
  RunConfig config = load_config(flags.config_path);
  if (flags.seed >= 0) {
    config.seed = static_cast<unsigned>(flags.seed);
    config.spec.options.seed = config.seed;
  }
  fs::create_directories(flags.out_dir);
  return config;
}

const char* status_name(const SolveOutcome& outcome) {
  return outcome.is_global() ? "Global" : "BlowUp";
}

json outcome_summary(const RunConfig& config, const SolveOutcome& outcome) {
  const ConstraintSpec& cs = config.spec.constraints;
  const double q = cs.kind == ConstraintKind::AvgInSpace ? cs.q : 2.0;
  const ExistenceDiagnostic diag =
      global_existence_diagnostic(config.spec.mesh, outcome.trajectory, config.spec.f, q);
  json summary;
  summary["status"] = status_name(outcome);
  summary["T_estimate"] = outcome.T_estimate;
  summary["last_step"] = outcome.last_step;
  if (!outcome.is_global())
    summary["reason"] = outcome.reason == BlowUpReason::NewtonDiverged ? "NewtonDiverged"
                                                                       : "NormExceeded";
  summary["max_abs_state"] = outcome.trajectory.states.cwiseAbs().maxCoeff();
  summary["diagnostics"] = {{"q", q},
                            {"sup_grad_q_norm", diag.sup_grad_q_norm},
                            {"f_load_l2_time", diag.f_load_l2_time}};
  return summary;
}

int cmd_solve_state(const CommonFlags& flags) {
  const RunConfig config = load(flags);
  const Control u = config.run_control.realize(config.spec);
  const SolveOutcome outcome = solve_state(config.spec, u);
  write_file(fs::path(flags.out_dir) / "trajectory.csv",
             trajectory_csv(outcome.trajectory));
  write_file(fs::path(flags.out_dir) / "summary.json",
             outcome_summary(config, outcome).dump(2) + "\n");
  return 0;
}

int cmd_optimize(const CommonFlags& flags) {
  const RunConfig config = load(flags);
  const Control u_init = config.run_control.realize(config.spec);
  const OptimizeResult result = optimize(config.spec, u_init);

  const Vector step_times =
      Vector::LinSpaced(config.spec.steps, config.spec.tau(), config.spec.horizon);
  write_file(fs::path(flags.out_dir) / "control.csv", control_csv(result.control, step_times));
  write_file(fs::path(flags.out_dir) / "trajectory.csv",
             trajectory_csv(result.outcome.trajectory));
  write_file(fs::path(flags.out_dir) / "multipliers.csv",
             multipliers_csv(result.multipliers, result.outcome.trajectory.times));
  write_file(fs::path(flags.out_dir) / "history.csv", history_csv(result.history));

  json summary = outcome_summary(config, result.outcome);
  summary["objective"] = result.objective;
  summary["penalty"] = result.penalty;
  summary["pg_residual"] = result.pg_residual;
  summary["max_violation"] = result.max_violation;
  summary["termination"] = result.termination;
  summary["final_weight"] = result.final_weight;
  summary["iterations"] = result.history.size();
  write_file(fs::path(flags.out_dir) / "summary.json", summary.dump(2) + "\n");

  const bool constraints_met = !config.spec.constraints.active() ||
                               result.max_violation <= config.spec.constraints.target_violation;
  const bool pass =
      result.pg_residual <= config.spec.options.opt_tol && constraints_met;
  return pass ? 0 : 1;
}

int cmd_check_kkt(const CommonFlags& flags, const std::string& artifacts) {
  const RunConfig config = load(flags);
  const fs::path dir = artifacts.empty() ? fs::path(flags.out_dir) : fs::path(artifacts);
  const Control u = parse_control_csv(read_file(dir / "control.csv"));
  const Trajectory traj = parse_trajectory_csv(read_file(dir / "trajectory.csv"));
  const MultiplierSet multipliers = parse_multipliers_csv(
      read_file(dir / "multipliers.csv"), config.spec.constraints.kind);

  const KKTReport report = check_kkt(config.spec, u, traj, multipliers,
                                     config.kkt_tolerances);
  json out;
  out["stationarity"] = {{"residual", report.stationarity_residual},
                         {"tolerance", report.tolerances.stationarity},
                         {"pass", report.stationarity_ok}};
  out["complementarity"] = {{"residual", report.complementarity_residual},
                            {"tolerance", report.tolerances.complementarity},
                            {"pass", report.complementarity_ok}};
  out["multipliers"] = {{"min", report.multiplier_min},
                        {"tolerance", report.tolerances.multiplier_nonneg},
                        {"pass", report.multipliers_ok}};
  out["feasibility"] = {{"max_violation", report.max_feasibility_violation},
                        {"tolerance", report.tolerances.feasibility},
                        {"pass", report.feasibility_ok}};
  out["active_set_support"] = {{"tol_active", report.tolerances.tol_active},
                               {"pass", report.active_set_support_ok}};
  out["adjoint_duality"] = {{"gap", report.adjoint_duality_gap},
                            {"tolerance", report.tolerances.duality_gap},
                            {"pass", report.duality_ok}};
  out["verdict"] = report.pass ? "pass" : "fail";
  write_file(fs::path(flags.out_dir) / "kkt_report.json", out.dump(2) + "\n");
  return report.pass ? 0 : 1;
}

int cmd_grad_check(const CommonFlags& flags) {
  const RunConfig config = load(flags);
  const ProblemSpec& spec = config.spec;
  const Discretization disc = discretize(spec);
  const Control u = config.run_control.realize(spec);
  const double weight = spec.constraints.penalty_weight;

  auto evaluate = [&](const Control& cand) -> std::optional<double> {
    const SolveOutcome outcome = solve_state(spec, cand);
    if (!outcome.is_global()) return std::nullopt;
    double value = objective_value(spec, disc, cand, outcome.trajectory);
    if (spec.constraints.active())
      value += penalty_value(spec.constraints, spec.mesh, outcome.trajectory, weight);
    return value;
  };

  const SolveOutcome base = solve_state(spec, u);
  json out;
  if (!base.is_global()) {
    out["error"] = "state blew up at the base control";
    write_file(fs::path(flags.out_dir) / "grad_check.json", out.dump(2) + "\n");
    return 1;
  }
  DualData duals;
  if (spec.constraints.active())
    duals = penalty_duals(spec.constraints, spec.mesh, base.trajectory, weight);
  const Control grad = reduced_gradient(spec, disc, u, base.trajectory, duals);

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double eps = config.grad_check.epsilon;
  double max_rel_error = 0.0;
  json directions = json::array();
  for (int trial = 0; trial < config.grad_check.directions; ++trial) {
    Control v = Control::zero(u.rows(), u.steps());
    for (Index k = 0; k < v.steps(); ++k)
      for (Index i = 0; i < v.rows(); ++i) v.values(i, k) = normal(rng);
    const auto plus = evaluate(Control{u.values + eps * v.values});
    const auto minus = evaluate(Control{u.values - eps * v.values});
    if (!plus || !minus) {
      out["error"] = "finite-difference probe blew up";
      write_file(fs::path(flags.out_dir) / "grad_check.json", out.dump(2) + "\n");
      return 1;
    }
    const double fd = (*plus - *minus) / (2.0 * eps);
    const double adj = control_inner(spec, disc, grad, v);
    const double rel = std::abs(fd - adj) / std::max(1e-12, std::abs(adj));
    max_rel_error = std::max(max_rel_error, rel);
    directions.push_back({{"fd", fd}, {"adjoint", adj}, {"rel_error", rel}});
  }
  out["directions"] = directions;
  out["max_rel_error"] = max_rel_error;
  out["tolerance"] = config.grad_check.tolerance;
  out["pass"] = max_rel_error <= config.grad_check.tolerance;
  write_file(fs::path(flags.out_dir) / "grad_check.json", out.dump(2) + "\n");
  return max_rel_error <= config.grad_check.tolerance ? 0 : 1;
}

int cmd_blowup_scan(const CommonFlags& flags) {
  const RunConfig config = load(flags);
  if (!config.blowup_values)
    throw ConfigError("missing required field: blowup_scan (needed by blowup-scan)");
  if (config.spec.f.kind != Nonlinearity::Kind::Kawohl)
    throw ConfigError("blowup-scan requires the kawohl nonlinearity");

  std::string csv = "lambda,status,T_estimate\n";
  for (double lambda : *config.blowup_values) {
    ProblemSpec spec = config.spec;
    spec.f = Nonlinearity::kawohl(lambda, config.spec.f.r);
    const Control u = config.run_control.realize(spec);
    const SolveOutcome outcome = solve_state(spec, u);
    csv += format_double(lambda);
    csv += ',';
    csv += status_name(outcome);
    csv += ',';
    csv += format_double(outcome.T_estimate);
    csv += '\n';
  }
  write_file(fs::path(flags.out_dir) / "scan.csv", csv);
  return 0;
}

int cmd_slater_check(const CommonFlags& flags, const std::string& ubar_path,
                     const std::string& uhat_path) {
  RunConfig config = load(flags);
  if (!ubar_path.empty()) {
    config.slater_u_bar.kind = ControlSource::Kind::File;
    config.slater_u_bar.path = ubar_path;
  }
  if (!uhat_path.empty()) {
    config.slater_u_hat.kind = ControlSource::Kind::File;
    config.slater_u_hat.path = uhat_path;
  }
  const Control u_bar = config.slater_u_bar.realize(config.spec);
  const Control u_hat = config.slater_u_hat.realize(config.spec);
  const SlaterCheck check = check_slater(config.spec, u_bar, u_hat);

  json out;
  out["margin"] = check.report.margin;
  out["min_time_node"] = check.report.min_time;
  out["min_component"] = check.report.min_component;
  out["initial_slack"] = check.initial_slack;
  out["initial_condition_ok"] = check.initial_condition_ok;
  out["certified"] = check.certified;
  out["best_margin"] = check.best_margin;
  out["best_alpha"] = check.best_alpha;
  json scan = json::array();
  for (const auto& [alpha, margin] : check.scan)
    scan.push_back({{"alpha", alpha}, {"margin", margin}});
  out["rescaling_scan"] = scan;
  write_file(fs::path(flags.out_dir) / "slater.json", out.dump(2) + "\n");
  return check.certified && check.initial_condition_ok ? 0 : 1;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"optimal control of quasilinear parabolic equations with gradient "
               "constraints"};
  app.require_subcommand(1);

  CommonFlags solve_flags, opt_flags, kkt_flags, grad_flags, scan_flags, slater_flags;
  std::string artifacts_dir, ubar_path, uhat_path;

  CLI::App* solve = app.add_subcommand("solve-state", "solve the state equation");
  add_common(solve, solve_flags);
  CLI::App* opt = app.add_subcommand("optimize", "projected-gradient optimization");
  add_common(opt, opt_flags);
  CLI::App* kkt = app.add_subcommand("check-kkt", "certify first-order conditions");
  add_common(kkt, kkt_flags);
  kkt->add_option("--artifacts", artifacts_dir, "directory with optimize artifacts");
  CLI::App* grad = app.add_subcommand("grad-check", "adjoint gradient vs finite differences");
  add_common(grad, grad_flags);
  CLI::App* scan = app.add_subcommand("blowup-scan", "blow-up parameter scan");
  add_common(scan, scan_flags);
  CLI::App* slater = app.add_subcommand("slater-check", "linearized Slater condition");
  add_common(slater, slater_flags);
  slater->add_option("--ubar", ubar_path, "base control CSV");
  slater->add_option("--uhat", uhat_path, "Slater direction control CSV");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, std::cout, std::cerr);
    return code == 0 ? 0 : 2;
  }

  try {
    if (solve->parsed()) return cmd_solve_state(solve_flags);
    if (opt->parsed()) return cmd_optimize(opt_flags);
    if (kkt->parsed()) return cmd_check_kkt(kkt_flags, artifacts_dir);
    if (grad->parsed()) return cmd_grad_check(grad_flags);
    if (scan->parsed()) return cmd_blowup_scan(scan_flags);
    if (slater->parsed()) return cmd_slater_check(slater_flags, ubar_path, uhat_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace gradctrl
