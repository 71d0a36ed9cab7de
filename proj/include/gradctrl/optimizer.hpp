#pragma once

#include <functional>
#include <optional>
#include <string>

#include "gradctrl/linearized.hpp"

namespace gradctrl {

/// Componentwise clamp onto [u_low, u_up]; idempotent.
Control project_box(const Control& u, const Control& u_low, const Control& u_up);

struct IterationRecord {
  int iter = 0;
  double objective = 0.0;     // tracking + Tikhonov part
  double penalty = 0.0;       // Moreau-Yosida value at the current weight
  double violation = 0.0;
  double pg_residual = 0.0;   // ||u - P(u - grad)||_inf
  double step_length = 0.0;
  double weight = 0.0;        // penalty weight of the stage
};

struct OptimizeResult {
  Control control;
  SolveOutcome outcome;
  MultiplierSet multipliers;
  std::vector<IterationRecord> history;
  std::string termination;
  double final_weight = 0.0;
  double objective = 0.0;
  double penalty = 0.0;
  double pg_residual = 0.0;
  double max_violation = 0.0;
};

/// Penalized objective at a candidate control; nullopt on blow-up. The solve
/// outcome of the candidate is written through.
using PenalizedEvaluator =
    std::function<std::optional<double>(const Control&, SolveOutcome&)>;

struct LineSearchResult {
  bool accepted = false;
  bool stagnated = false;
  double step = 0.0;
  Control control;
  SolveOutcome outcome;
  double value = 0.0;
};

/// Armijo backtracking over project_box(u + s * direction); blow-up outcomes
/// count as +infinity and shrink s.
LineSearchResult line_search(const PenalizedEvaluator& evaluate, const ProblemSpec& spec,
                             const Discretization& disc, const Control& u,
                             const Control& direction, const Control& gradient,
                             double current_value, double initial_step);

/// Convenience wrapper at the problem's configured penalty weight (direction
/// is taken as the descent direction, gradient = -direction).
LineSearchResult line_search(const ProblemSpec& spec, const Control& u,
                             const Control& direction, double current_value);

/// Projected gradient with Armijo backtracking and geometric penalty
/// continuation on the constraint weight.
OptimizeResult optimize(const ProblemSpec& spec, const Control& u_init);
OptimizeResult optimize(const ProblemSpec& spec);

/// Default start: zero clipped into the control box.
Control default_initial_control(const ProblemSpec& spec);

}  // namespace gradctrl
