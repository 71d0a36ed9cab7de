#include "gradctrl/constraints.hpp"

#include <cmath>
#include <limits>

#include "gradctrl/linearized.hpp"
#include "gradctrl/problem.hpp"
#include "gradctrl/state_solver.hpp"

namespace gradctrl {

namespace {

double positive_part(double x) { return x > 0.0 ? x : 0.0; }

void require_positive(const Matrix& bound, const char* what) {
  if (bound.size() == 0) throw std::invalid_argument(std::string(what) + " must be provided");
  if ((bound.array() <= 0.0).any())
    throw std::invalid_argument(std::string(what) + " must be strictly positive");
}

void require_ordered(const Matrix& low, const Matrix& up, const char* what) {
  if (low.size() == 0 || up.size() == 0)
    throw std::invalid_argument(std::string(what) + " bounds must be provided");
  if (low.rows() == up.rows() && low.cols() == up.cols()) {
    if ((low.array() > up.array()).any())
      throw std::invalid_argument(std::string(what) + " bounds require low <= up");
  } else if (low.maxCoeff() > up.minCoeff()) {
    throw std::invalid_argument(std::string(what) + " bounds require low <= up");
  }
}

}  // namespace

double broadcast_at(const Matrix& bound, Index row, Index col) {
  const Index r = bound.rows() == 1 ? 0 : row;
  const Index c = bound.cols() == 1 ? 0 : col;
  if (r >= bound.rows() || c >= bound.cols())
    throw std::invalid_argument("constraint bound shape does not cover the index set");
  return bound(r, c);
}

ConstraintSpec ConstraintSpec::none() { return {}; }

ConstraintSpec ConstraintSpec::avg_in_space(double q, Matrix g_avg) {
  // q = infinity is identified with the pointwise family.
  if (std::isinf(q)) return pointwise_q(std::move(g_avg));
  ConstraintSpec cs;
  cs.kind = ConstraintKind::AvgInSpace;
  cs.q = q;
  cs.g_avg = std::move(g_avg);
  return cs;
}

ConstraintSpec ConstraintSpec::pointwise_q(Matrix g) {
  ConstraintSpec cs;
  cs.kind = ConstraintKind::PointwiseQ;
  cs.g = std::move(g);
  return cs;
}

ConstraintSpec ConstraintSpec::componentwise(Matrix g_low, Matrix g_up) {
  ConstraintSpec cs;
  cs.kind = ConstraintKind::Componentwise;
  cs.g_low = std::move(g_low);
  cs.g_up = std::move(g_up);
  return cs;
}

ConstraintSpec ConstraintSpec::zero_order_box(Matrix y_low, Matrix y_up) {
  ConstraintSpec cs;
  cs.kind = ConstraintKind::ZeroOrderBox;
  cs.y_low = std::move(y_low);
  cs.y_up = std::move(y_up);
  return cs;
}

void ConstraintSpec::validate(const Mesh&) const {
  if (!active()) return;
  if (!(penalty_weight > 0.0))
    throw std::invalid_argument("constraint penalty weight must be positive");
  if (!(continuation_factor > 1.0))
    throw std::invalid_argument("constraint continuation factor must exceed 1");
  if (!(target_violation > 0.0))
    throw std::invalid_argument("constraint continuation target must be positive");
  switch (kind) {
    case ConstraintKind::AvgInSpace:
      if (!(q >= 2.0) || !std::isfinite(q))
        throw std::invalid_argument("gradient norm exponent q must satisfy 2 <= q < inf");
      require_positive(g_avg, "g_avg");
      break;
    case ConstraintKind::PointwiseQ:
      require_positive(g, "g");
      break;
    case ConstraintKind::Componentwise:
      require_ordered(g_low, g_up, "componentwise gradient");
      break;
    case ConstraintKind::ZeroOrderBox:
      require_ordered(y_low, y_up, "zero-order state");
      break;
    case ConstraintKind::None:
      break;
  }
}

double gradient_q_norm(const Mesh& mesh, const Vector& y_full, double q) {
  if (!(q >= 2.0)) throw std::invalid_argument("gradient q-norm requires q >= 2");
  const Eigen::Matrix2Xd grads = nodal_gradient(mesh, y_full);
  double sum = 0.0;
  for (int e = 0; e < mesh.element_count(); ++e)
    sum += mesh.elements[e].measure * std::pow(grads.col(e).squaredNorm(), 0.5 * q);
  return sum;
}

double q_laplacian_pairing(const Mesh& mesh, const Vector& y_full, const Vector& z_full,
                           double q) {
  if (!(q >= 2.0)) throw std::invalid_argument("q-laplacian requires q >= 2");
  const Eigen::Matrix2Xd gy = nodal_gradient(mesh, y_full);
  const Eigen::Matrix2Xd gz = nodal_gradient(mesh, z_full);
  double sum = 0.0;
  for (int e = 0; e < mesh.element_count(); ++e) {
    const double n2 = gy.col(e).squaredNorm();
    sum += mesh.elements[e].measure * std::pow(n2, 0.5 * (q - 2.0)) *
           gy.col(e).dot(gz.col(e));
  }
  return q * sum;
}

Vector q_laplacian_dual(const Mesh& mesh, const Vector& y_full, double q) {
  if (!(q >= 2.0)) throw std::invalid_argument("q-laplacian requires q >= 2");
  const Eigen::Matrix2Xd gy = nodal_gradient(mesh, y_full);
  const int nv = mesh.dimension + 1;
  Vector dual = Vector::Zero(mesh.free_count());
  for (int e = 0; e < mesh.element_count(); ++e) {
    const Element& el = mesh.elements[e];
    const double n2 = gy.col(e).squaredNorm();
    const double w = q * el.measure * std::pow(n2, 0.5 * (q - 2.0));
    if (w == 0.0) continue;
    for (int a = 0; a < nv; ++a) {
      const int i = mesh.free_index[el.vertices[a]];
      if (i >= 0) dual(i) += w * gy.col(e).dot(el.basis_gradients.col(a));
    }
  }
  return dual;
}

ConstraintEval eval_constraints(const ConstraintSpec& cs, const Mesh& mesh,
                                const Trajectory& traj, double feas_tol) {
  const Index K = traj.step_count();
  ConstraintEval eval;
  switch (cs.kind) {
    case ConstraintKind::None:
      break;
    case ConstraintKind::AvgInSpace: {
      eval.upper.resize(1, K + 1);
      for (Index k = 0; k <= K; ++k)
        eval.upper(0, k) =
            gradient_q_norm(mesh, traj.states.col(k), cs.q) - broadcast_at(cs.g_avg, 0, k);
      break;
    }
    case ConstraintKind::PointwiseQ: {
      eval.upper.resize(mesh.element_count(), K + 1);
      for (Index k = 0; k <= K; ++k) {
        const Eigen::Matrix2Xd grads = nodal_gradient(mesh, traj.states.col(k));
        for (int e = 0; e < mesh.element_count(); ++e)
          eval.upper(e, k) = grads.col(e).squaredNorm() - broadcast_at(cs.g, e, k);
      }
      break;
    }
    case ConstraintKind::Componentwise: {
      const int d = mesh.dimension;
      eval.upper.resize(mesh.element_count() * d, K + 1);
      eval.lower.resize(mesh.element_count() * d, K + 1);
      for (Index k = 0; k <= K; ++k) {
        const Eigen::Matrix2Xd grads = nodal_gradient(mesh, traj.states.col(k));
        for (int e = 0; e < mesh.element_count(); ++e) {
          for (int c = 0; c < d; ++c) {
            const Index row = static_cast<Index>(e) * d + c;
            eval.upper(row, k) = grads(c, e) - broadcast_at(cs.g_up, row, k);
            eval.lower(row, k) = broadcast_at(cs.g_low, row, k) - grads(c, e);
          }
        }
      }
      break;
    }
    case ConstraintKind::ZeroOrderBox: {
      eval.upper.resize(mesh.node_count(), K + 1);
      eval.lower.resize(mesh.node_count(), K + 1);
      for (Index k = 0; k <= K; ++k) {
        for (int i = 0; i < mesh.node_count(); ++i) {
          eval.upper(i, k) = traj.states(i, k) - broadcast_at(cs.y_up, i, k);
          eval.lower(i, k) = broadcast_at(cs.y_low, i, k) - traj.states(i, k);
        }
      }
      break;
    }
  }
  double viol = 0.0;
  if (eval.upper.size()) viol = std::max(viol, eval.upper.maxCoeff());
  if (eval.lower.size()) viol = std::max(viol, eval.lower.maxCoeff());
  eval.max_violation = positive_part(viol);
  eval.feasible = eval.max_violation <= feas_tol;
  return eval;
}

double MultiplierSet::min_entry() const {
  double m = std::numeric_limits<double>::infinity();
  if (interior.size()) m = std::min(m, interior.minCoeff());
  if (terminal.size()) m = std::min(m, terminal.minCoeff());
  if (interior_lower.size()) m = std::min(m, interior_lower.minCoeff());
  if (terminal_lower.size()) m = std::min(m, terminal_lower.minCoeff());
  return std::isfinite(m) ? m : 0.0;
}

double MultiplierSet::max_entry() const {
  double m = 0.0;
  if (interior.size()) m = std::max(m, interior.maxCoeff());
  if (terminal.size()) m = std::max(m, terminal.maxCoeff());
  if (interior_lower.size()) m = std::max(m, interior_lower.maxCoeff());
  if (terminal_lower.size()) m = std::max(m, terminal_lower.maxCoeff());
  return m;
}

DualData DualData::zero(Index steps, Index free_count) {
  DualData dd;
  dd.running.assign(steps, Vector::Zero(free_count));
  dd.terminal = Vector::Zero(free_count);
  return dd;
}

MultiplierSet recover_multipliers(const ConstraintSpec& cs, const Mesh& mesh,
                                  const Trajectory& traj, double weight) {
  const Index K = traj.step_count();
  const ConstraintEval eval = eval_constraints(cs, mesh, traj);
  MultiplierSet ms;
  ms.kind = cs.kind;
  if (!cs.active()) return ms;

  // Row weights: element measures for element-indexed families, nodal
  // measures for the zero-order box, one for the time-only family.
  Vector row_weight;
  switch (cs.kind) {
    case ConstraintKind::AvgInSpace:
      row_weight = Vector::Ones(1);
      break;
    case ConstraintKind::PointwiseQ: {
      row_weight.resize(mesh.element_count());
      for (int e = 0; e < mesh.element_count(); ++e)
        row_weight(e) = mesh.elements[e].measure;
      break;
    }
    case ConstraintKind::Componentwise: {
      const int d = mesh.dimension;
      row_weight.resize(mesh.element_count() * d);
      for (int e = 0; e < mesh.element_count(); ++e)
        for (int c = 0; c < d; ++c) row_weight(e * d + c) = mesh.elements[e].measure;
      break;
    }
    case ConstraintKind::ZeroOrderBox:
      row_weight = lumped_mass(mesh);
      break;
    case ConstraintKind::None:
      break;
  }

  const Index rows = eval.upper.rows();
  ms.interior = Matrix::Zero(rows, K + 1);
  ms.terminal = Vector::Zero(rows);
  const bool two_sided = eval.lower.size() > 0;
  if (two_sided) {
    ms.interior_lower = Matrix::Zero(rows, K + 1);
    ms.terminal_lower = Vector::Zero(rows);
  }
  for (Index k = 1; k < K; ++k) {
    const double tau_k = traj.times(k) - traj.times(k - 1);
    for (Index rr = 0; rr < rows; ++rr) {
      ms.interior(rr, k) = weight * tau_k * row_weight(rr) * positive_part(eval.upper(rr, k));
      if (two_sided)
        ms.interior_lower(rr, k) =
            weight * tau_k * row_weight(rr) * positive_part(eval.lower(rr, k));
    }
  }
  for (Index rr = 0; rr < rows; ++rr) {
    ms.terminal(rr) = weight * row_weight(rr) * positive_part(eval.upper(rr, K));
    if (two_sided)
      ms.terminal_lower(rr) = weight * row_weight(rr) * positive_part(eval.lower(rr, K));
  }
  return ms;
}

double penalty_value(const ConstraintSpec& cs, const Mesh& mesh, const Trajectory& traj,
                     double weight) {
  if (!cs.active()) return 0.0;
  const Index K = traj.step_count();
  const ConstraintEval eval = eval_constraints(cs, mesh, traj);
  const MultiplierSet ms = recover_multipliers(cs, mesh, traj, weight);
  // value = (1/2) sum multipliers * positive parts (each multiplier already
  // carries c and its time/space weight)
  double value = 0.0;
  for (Index k = 1; k < K; ++k)
    for (Index rr = 0; rr < eval.upper.rows(); ++rr) {
      value += ms.interior(rr, k) * positive_part(eval.upper(rr, k));
      if (eval.lower.size())
        value += ms.interior_lower(rr, k) * positive_part(eval.lower(rr, k));
    }
  for (Index rr = 0; rr < eval.upper.rows(); ++rr) {
    value += ms.terminal(rr) * positive_part(eval.upper(rr, K));
    if (eval.lower.size()) value += ms.terminal_lower(rr) * positive_part(eval.lower(rr, K));
  }
  return 0.5 * value;
}

DualData multiplier_duals(const ConstraintSpec& cs, const Mesh& mesh,
                          const Trajectory& traj, const MultiplierSet& ms) {
  const Index K = traj.step_count();
  const int nf = mesh.free_count();
  DualData dd = DualData::zero(K, nf);
  if (!cs.active() || ms.empty()) return dd;
  const int nv = mesh.dimension + 1;
  const int d = mesh.dimension;

  auto accumulate = [&](Vector& dual, const Vector& y_full, auto weight_upper,
                        auto weight_lower) {
    switch (cs.kind) {
      case ConstraintKind::AvgInSpace: {
        const double lam = weight_upper(0);
        if (lam != 0.0) dual += lam * q_laplacian_dual(mesh, y_full, cs.q);
        break;
      }
      case ConstraintKind::PointwiseQ: {
        const Eigen::Matrix2Xd grads = nodal_gradient(mesh, y_full);
        for (int e = 0; e < mesh.element_count(); ++e) {
          const double nu = weight_upper(e);
          if (nu == 0.0) continue;
          const Element& el = mesh.elements[e];
          for (int a = 0; a < nv; ++a) {
            const int i = mesh.free_index[el.vertices[a]];
            if (i >= 0) dual(i) += 2.0 * nu * grads.col(e).dot(el.basis_gradients.col(a));
          }
        }
        break;
      }
      case ConstraintKind::Componentwise: {
        for (int e = 0; e < mesh.element_count(); ++e) {
          const Element& el = mesh.elements[e];
          for (int c = 0; c < d; ++c) {
            const double nu = weight_upper(e * d + c) - weight_lower(e * d + c);
            if (nu == 0.0) continue;
            for (int a = 0; a < nv; ++a) {
              const int i = mesh.free_index[el.vertices[a]];
              if (i >= 0) dual(i) += nu * el.basis_gradients(c, a);
            }
          }
        }
        break;
      }
      case ConstraintKind::ZeroOrderBox: {
        for (int i = 0; i < mesh.node_count(); ++i) {
          const int fi = mesh.free_index[i];
          if (fi >= 0) dual(fi) += weight_upper(i) - weight_lower(i);
        }
        break;
      }
      case ConstraintKind::None:
        break;
    }
  };

  const bool two_sided = ms.interior_lower.size() > 0;
  for (Index k = 1; k <= K; ++k) {
    auto upper = [&](Index rr) { return ms.interior(rr, k); };
    auto lower = [&](Index rr) { return two_sided ? ms.interior_lower(rr, k) : 0.0; };
    accumulate(dd.running[k - 1], traj.states.col(k), upper, lower);
  }
  auto upper_T = [&](Index rr) { return ms.terminal(rr); };
  auto lower_T = [&](Index rr) { return two_sided ? ms.terminal_lower(rr) : 0.0; };
  accumulate(dd.terminal, traj.states.col(K), upper_T, lower_T);
  return dd;
}

DualData penalty_duals(const ConstraintSpec& cs, const Mesh& mesh, const Trajectory& traj,
                       double weight) {
  return multiplier_duals(cs, mesh, traj, recover_multipliers(cs, mesh, traj, weight));
}

std::pair<double, DualData> penalty_value_and_duals(const ConstraintSpec& cs,
                                                    const Mesh& mesh,
                                                    const Trajectory& traj, double weight) {
  return {penalty_value(cs, mesh, traj, weight), penalty_duals(cs, mesh, traj, weight)};
}

SlaterReport slater_margin(const ProblemSpec& spec, const Control& u_bar,
                           const Control& u_hat) {
  const ConstraintSpec& cs = spec.constraints;
  if (cs.kind != ConstraintKind::AvgInSpace && cs.kind != ConstraintKind::PointwiseQ)
    throw std::invalid_argument("slater margin is defined for the gradient constraint families");

  const SolveOutcome outcome = solve_state(spec, u_bar);
  if (!outcome.is_global())
    throw std::runtime_error("state blew up at the base control; Slater margin undefined");
  const Trajectory& traj = outcome.trajectory;

  const Discretization disc = discretize(spec);
  Control v{u_hat.values - u_bar.values};
  const Trajectory z = solve_sensitivity(spec, disc, traj, v);

  const Index K = traj.step_count();
  SlaterReport report;
  report.margin = std::numeric_limits<double>::infinity();
  if (cs.kind == ConstraintKind::AvgInSpace) {
    for (Index k = 0; k <= K; ++k) {
      const double value = gradient_q_norm(spec.mesh, traj.states.col(k), cs.q) +
                           q_laplacian_pairing(spec.mesh, traj.states.col(k),
                                               z.states.col(k), cs.q);
      const double slack = broadcast_at(cs.g_avg, 0, k) - value;
      if (slack < report.margin) {
        report.margin = slack;
        report.min_time = k;
        report.min_component = 0;
      }
    }
    report.initial_slack =
        broadcast_at(cs.g_avg, 0, 0) - gradient_q_norm(spec.mesh, traj.states.col(0), cs.q);
  } else {
    const Eigen::Matrix2Xd g0 = nodal_gradient(spec.mesh, traj.states.col(0));
    report.initial_slack = std::numeric_limits<double>::infinity();
    for (int e = 0; e < spec.mesh.element_count(); ++e)
      report.initial_slack = std::min(
          report.initial_slack, broadcast_at(cs.g, e, 0) - g0.col(e).squaredNorm());
    for (Index k = 0; k <= K; ++k) {
      const Eigen::Matrix2Xd gy = nodal_gradient(spec.mesh, traj.states.col(k));
      const Eigen::Matrix2Xd gz = nodal_gradient(spec.mesh, z.states.col(k));
      for (int e = 0; e < spec.mesh.element_count(); ++e) {
        const double value = gy.col(e).squaredNorm() + 2.0 * gy.col(e).dot(gz.col(e));
        const double slack = broadcast_at(cs.g, e, k) - value;
        if (slack < report.margin) {
          report.margin = slack;
          report.min_time = k;
          report.min_component = e;
        }
      }
    }
  }
  return report;
}

}  // namespace gradctrl
