#pragma once

#include <optional>
#include <vector>

#include "gradctrl/assembly.hpp"
#include "gradctrl/model.hpp"

namespace gradctrl {

enum class ConstraintKind { None, AvgInSpace, PointwiseQ, Componentwise, ZeroOrderBox };

/// Gradient/state constraint families. Bound matrices broadcast: a 1x1 entry
/// applies everywhere, a single row varies in time only, a single column in
/// the component only.
struct ConstraintSpec {
  ConstraintKind kind = ConstraintKind::None;
  double q = 2.0;     // AvgInSpace exponent, q >= 2
  Matrix g_avg;       // AvgInSpace bound on ||grad y||_q^q, per time node
  Matrix g;           // PointwiseQ bound on |grad y|_2^2, per (element, time)
  Matrix g_low, g_up; // Componentwise bounds, rows indexed by element*d + component
  Matrix y_low, y_up; // ZeroOrderBox bounds, per (node, time)

  double penalty_weight = 1.0;
  double continuation_factor = 10.0;
  double target_violation = 1e-4;
  double max_weight = 1e8;

  bool active() const { return kind != ConstraintKind::None; }
  void validate(const Mesh& mesh) const;

  static ConstraintSpec none();
  static ConstraintSpec avg_in_space(double q, Matrix g_avg);
  static ConstraintSpec pointwise_q(Matrix g);
  static ConstraintSpec componentwise(Matrix g_low, Matrix g_up);
  static ConstraintSpec zero_order_box(Matrix y_low, Matrix y_up);
};

double broadcast_at(const Matrix& bound, Index row, Index col);

/// Discrete ||grad y||_{L^q}^q = sum_e measure(e) |grad y|_2^q. Requires q >= 2.
double gradient_q_norm(const Mesh& mesh, const Vector& y_full, double q);

/// <-Delta_q y, z> = q sum_e measure(e) |grad y|^{q-2} grad y . grad z, the
/// directional derivative of gradient_q_norm at y in direction z.
double q_laplacian_pairing(const Mesh& mesh, const Vector& y_full, const Vector& z_full,
                           double q);

/// The same pairing as a dual vector over the free nodes.
Vector q_laplacian_dual(const Mesh& mesh, const Vector& y_full, double q);

/// Constraint values h (positive entries violate) for every time node.
struct ConstraintEval {
  Matrix upper;  // h for one-sided families; upper-bound part for two-sided
  Matrix lower;  // lower-bound part for two-sided families
  double max_violation = 0.0;
  bool feasible = true;
};

ConstraintEval eval_constraints(const ConstraintSpec& cs, const Mesh& mesh,
                                const Trajectory& traj, double feas_tol = 1e-8);

/// Discrete Lagrange multipliers: tau-weighted interior values per time node
/// plus unit-weight terminal atoms. Two-sided families carry Jordan pairs
/// with the lower part in the *_lower members.
struct MultiplierSet {
  ConstraintKind kind = ConstraintKind::None;
  Matrix interior;  // rows: constraint components, cols: time nodes
  Vector terminal;
  Matrix interior_lower;
  Vector terminal_lower;

  bool empty() const { return interior.size() == 0 && terminal.size() == 0; }
  double min_entry() const;
  double max_entry() const;
};

/// Running duals (one per step, free nodes) plus the terminal atom dual fed
/// into the adjoint solve.
struct DualData {
  std::vector<Vector> running;
  Vector terminal;

  static DualData zero(Index steps, Index free_count);
};

/// Moreau-Yosida penalty of the constraint violation at weight c:
/// (c/2) [ sum_{k=1}^{N-1} tau h_k+^2 + h_N+^2 ] and the per-family analogs
/// with element-measure weights. The terminal node carries unit weight.
double penalty_value(const ConstraintSpec& cs, const Mesh& mesh, const Trajectory& traj,
                     double weight);

/// Exact derivative of penalty_value with respect to the nodal states.
DualData penalty_duals(const ConstraintSpec& cs, const Mesh& mesh, const Trajectory& traj,
                       double weight);

std::pair<double, DualData> penalty_value_and_duals(const ConstraintSpec& cs,
                                                    const Mesh& mesh,
                                                    const Trajectory& traj, double weight);

/// lambda_k = c tau h_k+ on interior time nodes, alpha_T = c h_N+ at the
/// terminal atom; element families carry measure(e) weights.
MultiplierSet recover_multipliers(const ConstraintSpec& cs, const Mesh& mesh,
                                  const Trajectory& traj, double weight);

/// Running duals generated by a given multiplier set (the penalty duals are
/// exactly multiplier_duals(recover_multipliers(...))).
DualData multiplier_duals(const ConstraintSpec& cs, const Mesh& mesh,
                          const Trajectory& traj, const MultiplierSet& multipliers);

struct SlaterReport {
  double margin = 0.0;       // min over the index set of g - (value + linearized term)
  Index min_time = 0;        // minimizing time node
  Index min_component = 0;   // minimizing element (pointwise family)
  double initial_slack = 0;  // slack of the constraint at t = 0
};

struct ProblemSpec;

/// Linearized Slater margin at u_bar in direction u_hat - u_bar. Positive
/// margin certifies the discrete linearized Slater condition.
SlaterReport slater_margin(const ProblemSpec& spec, const Control& u_bar,
                           const Control& u_hat);

}  // namespace gradctrl
