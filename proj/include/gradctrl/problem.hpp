#pragma once

#include "gradctrl/constraints.hpp"
#include "gradctrl/model.hpp"

namespace gradctrl {

struct SolverOptions {
  double newton_tol = 1e-10;       // relative nonlinear residual per step
  int newton_max_iter = 25;
  int newton_max_halvings = 12;
  double blowup_threshold = 1e6;   // on ||y||_inf
  double feas_tol = 1e-8;
  double opt_tol = 1e-6;           // projected-gradient residual, max norm
  int opt_max_iter = 500;
  double armijo_c = 1e-4;
  int armijo_max_halvings = 30;
  double duality_gap_tol = 1e-10;
  double tol_active = 1e-3;
  unsigned seed = 42;
};

/// Full description of one control problem on the discretized cylinder.
struct ProblemSpec {
  Mesh mesh;
  double horizon = 1.0;
  int steps = 1;
  DiffusionLaw xi = DiffusionLaw::constant(1.0);
  CoefficientField mu;
  Nonlinearity f = Nonlinearity::zero();
  ControlMap control_map;
  Vector y0;             // full nodal, zero on Dirichlet nodes
  Matrix target;         // node_count x 1 (time constant) or x (steps+1)
  double gamma = 1.0;
  Control u_low, u_up;   // control_rows x steps
  ConstraintSpec constraints;
  SolverOptions options;

  double tau() const { return horizon / steps; }
  Vector target_at(Index k) const {
    return target.cols() == 1 ? target.col(0) : target.col(k);
  }
  void validate() const;
};

/// Assembled operators shared by the solvers.
struct Discretization {
  SparseMatrix mass_full;       // consistent P1 mass over all nodes
  SparseMatrix mass_free;       // free-node principal submatrix
  Vector lumped;                // nodal shares of the measure (all nodes)
  Vector actuator_load_free;    // (M a) on free nodes, time-only maps
  double tau = 0.0;
};

Discretization discretize(const ProblemSpec& spec);

/// Zero a nodal field on the Dirichlet nodes (interpolants of boundary-
/// compatible functions pick up roundoff there).
Vector zero_dirichlet(const Mesh& mesh, Vector y);

/// Control-to-load map: one dual vector on the free nodes per step.
/// Distributed controls inject through the lumped mass on the indicator
/// region; time-only controls scale the actuator load.
std::vector<Vector> apply_B(const ProblemSpec& spec, const Discretization& disc,
                            const Control& u);

/// Exact transpose of apply_B under the discrete inner products
/// (lumped-mass-weighted in space, step-weighted in time).
Control apply_B_adjoint(const ProblemSpec& spec, const Discretization& disc,
                        const std::vector<Vector>& w);

/// <u,v> over the control domain: sum_k tau sum_i w_i u v with w the lumped
/// nodal measure (distributed) or 1 (time only).
double control_inner(const ProblemSpec& spec, const Discretization& disc,
                     const Control& u, const Control& v);

}  // namespace gradctrl
