#include "gradctrl/kkt.hpp"

#include <cmath>
#include <random>

namespace gradctrl {

namespace {

double positive_part(double x) { return x > 0.0 ? x : 0.0; }

// sum of multiplier * nonnegative-slack pairings; slack = max(0, -h)
double complementarity_sum(const Matrix& mult_interior, const Vector& mult_terminal,
                           const Matrix& h, Index K) {
  double sum = 0.0;
  for (Index k = 0; k <= K; ++k)
    for (Index rr = 0; rr < h.rows(); ++rr)
      sum += mult_interior(rr, k) * positive_part(-h(rr, k));
  for (Index rr = 0; rr < h.rows(); ++rr)
    sum += mult_terminal(rr) * positive_part(-h(rr, K));
  return sum;
}

bool support_condition(const Matrix& mult_interior, const Vector& mult_terminal,
                       const Matrix& h, Index K, double mult_tol, double tol_active) {
  for (Index k = 0; k <= K; ++k)
    for (Index rr = 0; rr < h.rows(); ++rr)
      if (mult_interior(rr, k) > mult_tol && std::abs(h(rr, k)) > tol_active) return false;
  for (Index rr = 0; rr < h.rows(); ++rr)
    if (mult_terminal(rr) > mult_tol && std::abs(h(rr, K)) > tol_active) return false;
  return true;
}

// Relative gap of <L z, w> = <z, eta> over random probe trajectories z.
double duality_gap(const ProblemSpec& spec, const Discretization& disc,
                   const LinearizedSystem& system, const std::vector<Vector>& w,
                   const std::vector<Vector>& duals, const Vector& terminal, int probes,
                   unsigned seed) {
  const Index N = system.steps();
  const Index nf = disc.mass_free.rows();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst = 0.0;
  for (int p = 0; p < probes; ++p) {
    std::vector<Vector> z(N);
    for (Index k = 0; k < N; ++k) {
      z[k].resize(nf);
      for (Index i = 0; i < nf; ++i) z[k](i) = normal(rng);
    }
    double lhs = 0.0, rhs = 0.0, scale = 0.0;
    Vector prev = Vector::Zero(nf);
    for (Index k = 0; k < N; ++k) {
      const Vector Lz = system.block(k + 1) * z[k] - disc.mass_free * prev / disc.tau;
      lhs += Lz.dot(w[k]);
      rhs += duals[k].dot(z[k]);
      scale += Lz.norm() * w[k].norm();
      prev = z[k];
    }
    if (terminal.size()) rhs += terminal.dot(z[N - 1]);
    worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, scale));
  }
  return worst;
}

}  // namespace

KKTReport check_kkt(const ProblemSpec& spec, const Control& u, const Trajectory& traj,
                    const MultiplierSet& multipliers, const KKTTolerances& tol) {
  spec.validate();
  const ConstraintSpec& cs = spec.constraints;
  if (multipliers.kind != cs.kind)
    throw std::invalid_argument("multiplier set does not match the constraint family");
  if (traj.step_count() != spec.steps)
    throw std::invalid_argument("trajectory must be global (one state per step)");

  const Discretization disc = discretize(spec);
  KKTReport report;
  report.tolerances = tol;

  report.multiplier_min = multipliers.min_entry();
  report.multipliers_ok = report.multiplier_min >= -tol.multiplier_nonneg;

  const ConstraintEval eval = eval_constraints(cs, spec.mesh, traj, spec.options.feas_tol);
  report.max_feasibility_violation = eval.max_violation;
  report.feasibility_ok = eval.max_violation <= tol.feasibility;

  const Index K = traj.step_count();
  if (cs.active() && !multipliers.empty()) {
    report.complementarity_residual =
        complementarity_sum(multipliers.interior, multipliers.terminal, eval.upper, K);
    report.active_set_support_ok =
        support_condition(multipliers.interior, multipliers.terminal, eval.upper, K,
                          tol.multiplier_support, tol.tol_active);
    if (multipliers.interior_lower.size()) {
      report.complementarity_residual += complementarity_sum(
          multipliers.interior_lower, multipliers.terminal_lower, eval.lower, K);
      report.active_set_support_ok =
          report.active_set_support_ok &&
          support_condition(multipliers.interior_lower, multipliers.terminal_lower,
                            eval.lower, K, tol.multiplier_support, tol.tol_active);
    }
  }
  report.complementarity_ok = report.complementarity_residual <= tol.complementarity;
  report.support_ok = report.active_set_support_ok;

  // Adjoint with tracking residual plus multiplier-weighted constraint duals,
  // in the time-density convention of reduced_gradient.
  const DualData constraint_duals =
      cs.active() ? multiplier_duals(cs, spec.mesh, traj, multipliers)
                  : DualData::zero(K, spec.mesh.free_count());
  std::vector<Vector> duals(K);
  for (Index k = 1; k <= K; ++k) {
    const Vector diff = traj.states.col(k) - spec.target_at(k);
    duals[k - 1] = spec.mesh.restrict_free(disc.mass_full * diff);
    if (constraint_duals.running[k - 1].size())
      duals[k - 1] += constraint_duals.running[k - 1] / disc.tau;
  }
  Vector terminal;
  if (constraint_duals.terminal.size()) terminal = constraint_duals.terminal / disc.tau;
  const LinearizedSystem system(spec, disc, traj);
  const std::vector<Vector> w = system.adjoint(duals, terminal);

  Control grad = apply_B_adjoint(spec, disc, w);
  grad.values = spec.gamma * u.values + grad.values;
  const Control projected = project_box(Control{u.values - grad.values}, spec.u_low, spec.u_up);
  report.stationarity_residual = (u.values - projected.values).lpNorm<Eigen::Infinity>();
  report.stationarity_ok = report.stationarity_residual <= tol.stationarity;

  report.adjoint_duality_gap = duality_gap(spec, disc, system, w, duals, terminal,
                                           tol.duality_probes, spec.options.seed);
  report.duality_ok = report.adjoint_duality_gap <= tol.duality_gap;

  report.pass = report.stationarity_ok && report.complementarity_ok &&
                report.multipliers_ok && report.feasibility_ok && report.support_ok &&
                report.duality_ok;
  return report;
}

SlaterCheck check_slater(const ProblemSpec& spec, const Control& u_bar,
                         const Control& u_hat) {
  SlaterCheck check;
  check.report = slater_margin(spec, u_bar, u_hat);
  check.initial_slack = check.report.initial_slack;
  check.initial_condition_ok = check.initial_slack > 0.0;
  check.certified = check.report.margin > 0.0;
  check.best_margin = check.report.margin;
  check.best_alpha = 1.0;

  if (!check.certified) {
    // Rescaling scan over convex combinations: the linearized term is exactly
    // homogeneous in alpha, so z_alpha = alpha z and only the direction needs
    // rescaling.
    for (double alpha = 0.5; alpha >= 1.0 / 64.0 - 1e-15; alpha *= 0.5) {
      Control u_alpha{(1.0 - alpha) * u_bar.values + alpha * u_hat.values};
      const SlaterReport scaled = slater_margin(spec, u_bar, u_alpha);
      check.scan.emplace_back(alpha, scaled.margin);
      if (scaled.margin > check.best_margin) {
        check.best_margin = scaled.margin;
        check.best_alpha = alpha;
      }
    }
    check.certified = check.best_margin > 0.0;
  }
  return check;
}

}  // namespace gradctrl
