#pragma once

#include <memory>

#include "gradctrl/problem.hpp"
#include "gradctrl/state_solver.hpp"

namespace gradctrl {

/// L(y) = M/tau + K(xi(y)) + coupling from xi'(y) - F'(y): the per-step
/// implicit-Euler Jacobian on the free nodes, equal to the final Newton
/// Jacobian at a converged step.
SparseMatrix linearized_operator(const ProblemSpec& spec, const Discretization& disc,
                                 const Vector& y_full, double tau);

/// Block lower-bidiagonal linearization of the time-stepping map at a global
/// trajectory; factorizations are shared between the forward (sensitivity)
/// and transposed (adjoint) solves so the two are exact transposes.
class LinearizedSystem {
 public:
  LinearizedSystem(const ProblemSpec& spec, const Discretization& disc,
                   const Trajectory& traj);

  Index steps() const { return static_cast<Index>(blocks_.size()); }
  const SparseMatrix& block(Index step) const { return blocks_[step - 1]; }  // step 1..N

  /// Forward solve with z_0 = 0: L_k z_k = (M/tau) z_{k-1} + load_k.
  std::vector<Vector> forward(const std::vector<Vector>& loads) const;

  /// Backward transposed solve: L_k^T w_k = (M/tau) w_{k+1} + dual_k, the
  /// terminal dual entering the k = N block with unit weight.
  std::vector<Vector> adjoint(const std::vector<Vector>& running_duals,
                              const Vector& terminal_dual) const;

  Trajectory to_trajectory(const std::vector<Vector>& z_free) const;

 private:
  const ProblemSpec* spec_;
  const Discretization* disc_;
  std::vector<SparseMatrix> blocks_;
  std::vector<std::unique_ptr<Eigen::SparseLU<SparseMatrix>>> factors_;
};

/// S'(u) v: solution of the sensitivity equation with zero initial data.
Trajectory solve_sensitivity(const ProblemSpec& spec, const Discretization& disc,
                             const Trajectory& traj, const Control& v);

/// Adjoint state per step (k = 1..N, free nodes).
std::vector<Vector> solve_adjoint(const ProblemSpec& spec, const Discretization& disc,
                                  const Trajectory& traj,
                                  const std::vector<Vector>& running_duals,
                                  const Vector& terminal_dual);

/// Tracking + Tikhonov part of the discrete objective,
/// 1/2 sum_k tau ||y_k - y_d,k||_M^2 + gamma/2 <u,u>.
double objective_value(const ProblemSpec& spec, const Discretization& disc,
                       const Control& u, const Trajectory& traj);

/// gamma u + B* w with w the adjoint driven by the tracking residual plus the
/// given constraint duals: the exact gradient of the discrete penalized
/// reduced objective.
Control reduced_gradient(const ProblemSpec& spec, const Discretization& disc,
                         const Control& u, const Trajectory& traj,
                         const DualData& constraint_duals);

Control reduced_gradient(const ProblemSpec& spec, const Discretization& disc,
                         const Control& u, const Trajectory& traj);

}  // namespace gradctrl
