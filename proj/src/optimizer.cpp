#include "gradctrl/optimizer.hpp"

#include <cmath>
#include <limits>

namespace gradctrl {

Control project_box(const Control& u, const Control& u_low, const Control& u_up) {
  if (u.rows() != u_low.rows() || u.steps() != u_low.steps() || u.rows() != u_up.rows() ||
      u.steps() != u_up.steps())
    throw std::invalid_argument("project_box shapes must agree");
  Control out;
  out.values = u.values.cwiseMax(u_low.values).cwiseMin(u_up.values);
  return out;
}

Control default_initial_control(const ProblemSpec& spec) {
  const Index rows = control_rows(spec.control_map, spec.mesh);
  return project_box(Control::zero(rows, spec.steps), spec.u_low, spec.u_up);
}

LineSearchResult line_search(const PenalizedEvaluator& evaluate, const ProblemSpec& spec,
                             const Discretization& disc, const Control& u,
                             const Control& direction, const Control& gradient,
                             double current_value, double initial_step) {
  LineSearchResult result;
  if (!direction.values.allFinite())
    throw std::invalid_argument("line search direction must be finite");

  double s = initial_step;
  for (int halving = 0; halving <= spec.options.armijo_max_halvings; ++halving, s *= 0.5) {
    Control trial{u.values + s * direction.values};
    trial = project_box(trial, spec.u_low, spec.u_up);
    if ((trial.values - u.values).lpNorm<Eigen::Infinity>() == 0.0) {
      // Direction is zero or points out of the box: stagnation.
      result.stagnated = true;
      result.control = u;
      result.value = current_value;
      return result;
    }
    SolveOutcome outcome;
    const std::optional<double> value = evaluate(trial, outcome);
    if (!value.has_value()) continue;  // blow-up: shrink toward the global iterate
    const double decrease =
        control_inner(spec, disc, gradient, Control{u.values - trial.values});
    if (*value <= current_value - spec.options.armijo_c * decrease) {
      result.accepted = true;
      result.step = s;
      result.control = std::move(trial);
      result.outcome = std::move(outcome);
      result.value = *value;
      return result;
    }
  }
  result.stagnated = true;
  result.control = u;
  result.value = current_value;
  return result;
}

namespace {

PenalizedEvaluator make_evaluator(const ProblemSpec& spec, const Discretization& disc,
                                  double weight) {
  return [&spec, &disc, weight](const Control& u,
                                SolveOutcome& outcome) -> std::optional<double> {
    outcome = solve_state(spec, u);
    if (!outcome.is_global()) return std::nullopt;
    double value = objective_value(spec, disc, u, outcome.trajectory);
    if (spec.constraints.active())
      value += penalty_value(spec.constraints, spec.mesh, outcome.trajectory, weight);
    return value;
  };
}

}  // namespace

LineSearchResult line_search(const ProblemSpec& spec, const Control& u,
                             const Control& direction, double current_value) {
  const Discretization disc = discretize(spec);
  const PenalizedEvaluator eval = make_evaluator(spec, disc, spec.constraints.penalty_weight);
  Control gradient{-direction.values};
  return line_search(eval, spec, disc, u, direction, gradient, current_value, 1.0);
}

OptimizeResult optimize(const ProblemSpec& spec, const Control& u_init) {
  spec.validate();
  const Discretization disc = discretize(spec);
  const ConstraintSpec& cs = spec.constraints;
  const SolverOptions& opt = spec.options;

  OptimizeResult result;
  Control u = project_box(u_init, spec.u_low, spec.u_up);

  double weight = cs.active() ? cs.penalty_weight : 0.0;
  PenalizedEvaluator evaluate = make_evaluator(spec, disc, weight);

  SolveOutcome outcome;
  std::optional<double> value = evaluate(u, outcome);
  if (!value.has_value())
    throw std::runtime_error(
        "no feasible global starting point: the state solve from the initial control "
        "did not reach the time horizon; optimization needs a control whose state "
        "exists globally in time");

  int global_iter = 0;
  enum class StageStatus { Converged, IterationCap, Stagnated };
  std::string termination;

  auto current_violation = [&]() {
    return cs.active()
               ? eval_constraints(cs, spec.mesh, outcome.trajectory, opt.feas_tol)
                     .max_violation
               : 0.0;
  };

  while (true) {  // continuation stages
    StageStatus stage = StageStatus::IterationCap;
    Control u_prev = u, g_prev = u;
    bool have_prev = false;

    for (int stage_iter = 0; stage_iter < opt.opt_max_iter; ++stage_iter, ++global_iter) {
      DualData duals;
      if (cs.active()) duals = penalty_duals(cs, spec.mesh, outcome.trajectory, weight);
      const Control grad = reduced_gradient(spec, disc, u, outcome.trajectory, duals);

      const Control projected =
          project_box(Control{u.values - grad.values}, spec.u_low, spec.u_up);
      const double pg_residual = (u.values - projected.values).lpNorm<Eigen::Infinity>();

      const double pen =
          cs.active() ? penalty_value(cs, spec.mesh, outcome.trajectory, weight) : 0.0;
      result.history.push_back(
          {global_iter, *value - pen, pen, current_violation(), pg_residual, 0.0, weight});

      if (pg_residual <= opt.opt_tol) {
        stage = StageStatus::Converged;
        break;
      }

      // Spectral (Barzilai-Borwein) initial step, Armijo safeguarded.
      double step0 = 1.0;
      if (have_prev) {
        Control du{u.values - u_prev.values}, dg{grad.values - g_prev.values};
        const double num = control_inner(spec, disc, du, du);
        const double den = control_inner(spec, disc, du, dg);
        if (den > 0.0 && num > 0.0) step0 = std::min(1e8, std::max(1e-8, num / den));
      }
      u_prev = u;
      g_prev = grad;
      have_prev = true;

      const Control direction{-grad.values};
      const LineSearchResult ls =
          line_search(evaluate, spec, disc, u, direction, grad, *value, step0);
      if (!ls.accepted) {
        stage = StageStatus::Stagnated;
        break;
      }
      result.history.back().step_length = ls.step;
      u = ls.control;
      outcome = ls.outcome;
      value = ls.value;
    }

    if (!cs.active() || current_violation() <= cs.target_violation) {
      switch (stage) {
        case StageStatus::Converged: termination = "converged"; break;
        case StageStatus::Stagnated: termination = "line search stagnated"; break;
        case StageStatus::IterationCap: termination = "iteration cap reached"; break;
      }
      break;
    }
    if (weight >= cs.max_weight) {
      termination = "penalty weight cap reached";
      break;
    }
    weight = std::min(cs.max_weight, weight * cs.continuation_factor);
    evaluate = make_evaluator(spec, disc, weight);
    value = evaluate(u, outcome);  // same control, larger weight; still global
  }

  result.control = u;
  result.outcome = outcome;
  result.termination = termination;
  result.final_weight = weight;
  if (cs.active())
    result.multipliers = recover_multipliers(cs, spec.mesh, outcome.trajectory, weight);
  DualData duals;
  if (cs.active()) duals = penalty_duals(cs, spec.mesh, outcome.trajectory, weight);
  const Control grad = reduced_gradient(spec, disc, u, outcome.trajectory, duals);
  const Control projected =
      project_box(Control{u.values - grad.values}, spec.u_low, spec.u_up);
  result.pg_residual = (u.values - projected.values).lpNorm<Eigen::Infinity>();
  result.penalty =
      cs.active() ? penalty_value(cs, spec.mesh, outcome.trajectory, weight) : 0.0;
  result.objective = objective_value(spec, disc, u, outcome.trajectory);
  result.max_violation = current_violation();
  return result;
}

OptimizeResult optimize(const ProblemSpec& spec) {
  return optimize(spec, default_initial_control(spec));
}

}  // namespace gradctrl
