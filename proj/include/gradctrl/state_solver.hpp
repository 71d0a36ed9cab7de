#pragma once

#include "gradctrl/problem.hpp"

namespace gradctrl {

enum class BlowUpReason { NewtonDiverged, NormExceeded };

struct StepResult {
  bool ok = false;
  Vector y;  // free nodes
  int iterations = 0;
  double residual_norm = 0.0;
  BlowUpReason reason = BlowUpReason::NewtonDiverged;
};

/// Either a global trajectory or the certified part of one that stopped at
/// the last accepted time.
struct SolveOutcome {
  enum class Status { Global, BlowUp };
  Status status = Status::Global;
  Trajectory trajectory;       // states up to the last accepted step
  Index last_step = 0;         // k*: index of the last accepted step
  double T_estimate = 0.0;     // t_{k*}; equals the horizon when Global
  BlowUpReason reason = BlowUpReason::NewtonDiverged;

  bool is_global() const { return status == Status::Global; }
};

/// Implicit Euler in time, damped Newton in space.
class StateSolver {
 public:
  explicit StateSolver(const ProblemSpec& spec);

  const Discretization& disc() const { return disc_; }

  /// One implicit-Euler step M(y - y_prev)/tau + K(xi(y)) y = load + F(y).
  StepResult step(const Vector& y_prev_free, const Vector& load_free, double tau) const;

  SolveOutcome solve(const Control& u) const;

  /// Nonlinear step residual, recomputed from scratch (used to re-verify
  /// accepted steps independently of the Newton loop).
  Vector step_residual(const Vector& y_prev_free, const Vector& y_free,
                       const Vector& load_free, double tau) const;

 private:
  const ProblemSpec* spec_;
  Discretization disc_;
};

SolveOutcome solve_state(const ProblemSpec& spec, const Control& u);
StepResult step(const ProblemSpec& spec, const Vector& y_prev_free,
                const Vector& load_free, double tau);

/// Realized constants of the global-existence criterion: the sup over time of
/// the gradient q-norm and a discrete-in-time L2 proxy for the size of F(y).
struct ExistenceDiagnostic {
  double sup_grad_q_norm = 0.0;  // sup_k || grad y_k ||_{L^q}
  double f_load_l2_time = 0.0;   // sqrt( sum_k tau_k f_k^2 ), f_k = sum_e m_e |F_e|
  Vector grad_q_norms;           // per time node
  Vector f_load_l1;              // per time node
};

ExistenceDiagnostic global_existence_diagnostic(const Mesh& mesh, const Trajectory& traj,
                                                const Nonlinearity& nl, double q);

}  // namespace gradctrl
