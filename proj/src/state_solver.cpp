#include "gradctrl/state_solver.hpp"

#include <Eigen/SparseLU>

#include <cmath>

#include "gradctrl/constraints.hpp"
#include "gradctrl/linearized.hpp"

namespace gradctrl {

StateSolver::StateSolver(const ProblemSpec& spec) : spec_(&spec), disc_(discretize(spec)) {
  spec.validate();
}

Vector StateSolver::step_residual(const Vector& y_prev_free, const Vector& y_free,
                                  const Vector& load_free, double tau) const {
  const Mesh& mesh = spec_->mesh;
  const Vector y_full = mesh.scatter_free(y_free);
  const auto [xi, dxi] = eval_xi(spec_->xi, mesh, y_full);
  const SparseMatrix K = assemble_scaled_stiffness(mesh, spec_->mu, xi);
  const Eigen::Matrix2Xd grads = nodal_gradient(mesh, y_full);
  const Vector f_load = eval_F(spec_->f, mesh, y_full, grads);
  return disc_.mass_free * ((y_free - y_prev_free) / tau) + K * y_free - f_load - load_free;
}

StepResult StateSolver::step(const Vector& y_prev_free, const Vector& load_free,
                             double tau) const {
  if (!(tau > 0.0)) throw std::invalid_argument("time step must be positive");
  if (!y_prev_free.allFinite()) throw std::invalid_argument("previous state must be finite");

  StepResult result;
  const SolverOptions& opt = spec_->options;
  const double scale = 1.0 + (disc_.mass_free * y_prev_free / tau + load_free).norm();

  Vector y = y_prev_free;
  auto residual_or_inf = [&](const Vector& cand) -> std::pair<Vector, double> {
    try {
      Vector r = step_residual(y_prev_free, cand, load_free, tau);
      if (!r.allFinite()) return {Vector(), std::numeric_limits<double>::infinity()};
      return {std::move(r), 0.0};
    } catch (const invalid_evaluation_error&) {
      return {Vector(), std::numeric_limits<double>::infinity()};
    }
  };

  auto [r, bad] = residual_or_inf(y);
  if (std::isinf(bad)) {
    result.reason = BlowUpReason::NewtonDiverged;
    return result;
  }
  double rnorm = r.norm();

  for (int it = 0; it < opt.newton_max_iter; ++it) {
    if (rnorm <= opt.newton_tol * scale) {
      if (y.lpNorm<Eigen::Infinity>() > opt.blowup_threshold) {
        result.reason = BlowUpReason::NormExceeded;
        return result;
      }
      result.ok = true;
      result.y = y;
      result.iterations = it;
      result.residual_norm = rnorm;
      return result;
    }

    SparseMatrix J;
    try {
      J = linearized_operator(*spec_, disc_, spec_->mesh.scatter_free(y), tau);
    } catch (const invalid_evaluation_error&) {
      result.reason = BlowUpReason::NewtonDiverged;
      return result;
    }
    Eigen::SparseLU<SparseMatrix> lu(J);
    if (lu.info() != Eigen::Success) {
      result.reason = BlowUpReason::NewtonDiverged;
      return result;
    }
    const Vector d = lu.solve(-r);
    if (!d.allFinite()) {
      result.reason = BlowUpReason::NewtonDiverged;
      return result;
    }

    // Backtracking on the residual norm.
    double s = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= opt.newton_max_halvings; ++halving) {
      const Vector trial = y + s * d;
      auto [rt, badt] = residual_or_inf(trial);
      if (!std::isinf(badt) && rt.norm() <= (1.0 - opt.armijo_c * s) * rnorm) {
        y = trial;
        r = std::move(rt);
        rnorm = r.norm();
        accepted = true;
        break;
      }
      s *= 0.5;
    }
    if (!accepted) {
      result.reason = BlowUpReason::NewtonDiverged;
      return result;
    }
    if (y.lpNorm<Eigen::Infinity>() > 10.0 * opt.blowup_threshold) {
      result.reason = BlowUpReason::NormExceeded;
      return result;
    }
  }

  if (rnorm <= spec_->options.newton_tol * scale &&
      y.lpNorm<Eigen::Infinity>() <= opt.blowup_threshold) {
    result.ok = true;
    result.y = y;
    result.iterations = opt.newton_max_iter;
    result.residual_norm = rnorm;
    return result;
  }
  result.reason = y.lpNorm<Eigen::Infinity>() > opt.blowup_threshold
                      ? BlowUpReason::NormExceeded
                      : BlowUpReason::NewtonDiverged;
  return result;
}

SolveOutcome StateSolver::solve(const Control& u) const {
  const Mesh& mesh = spec_->mesh;
  const int N = spec_->steps;
  const double tau = disc_.tau;
  const std::vector<Vector> loads = apply_B(*spec_, disc_, u);

  Matrix states(mesh.node_count(), N + 1);
  states.col(0) = spec_->y0;
  Vector y = mesh.restrict_free(spec_->y0);

  for (int k = 1; k <= N; ++k) {
    const StepResult sr = step(y, loads[k - 1], tau);
    if (!sr.ok) {
      SolveOutcome out;
      out.status = SolveOutcome::Status::BlowUp;
      out.reason = sr.reason;
      out.last_step = k - 1;
      out.T_estimate = (k - 1) * tau;
      out.trajectory.times = Vector::LinSpaced(k, 0.0, (k - 1) * tau);
      out.trajectory.states = states.leftCols(k);
      return out;
    }
    y = sr.y;
    states.col(k) = mesh.scatter_free(y);
  }

  SolveOutcome out;
  out.status = SolveOutcome::Status::Global;
  out.last_step = N;
  out.T_estimate = spec_->horizon;
  out.trajectory.times = Vector::LinSpaced(N + 1, 0.0, spec_->horizon);
  out.trajectory.states = std::move(states);
  return out;
}

SolveOutcome solve_state(const ProblemSpec& spec, const Control& u) {
  return StateSolver(spec).solve(u);
}

StepResult step(const ProblemSpec& spec, const Vector& y_prev_free,
                const Vector& load_free, double tau) {
  return StateSolver(spec).step(y_prev_free, load_free, tau);
}

ExistenceDiagnostic global_existence_diagnostic(const Mesh& mesh, const Trajectory& traj,
                                                const Nonlinearity& nl, double q) {
  const Index K = traj.step_count();
  ExistenceDiagnostic diag;
  diag.grad_q_norms.resize(K + 1);
  diag.f_load_l1.resize(K + 1);
  for (Index k = 0; k <= K; ++k) {
    const Vector y = traj.states.col(k);
    diag.grad_q_norms(k) = std::pow(gradient_q_norm(mesh, y, q), 1.0 / q);
    const Eigen::Matrix2Xd grads = nodal_gradient(mesh, y);
    const Vector means = element_means(mesh, y);
    double l1 = 0.0;
    for (int e = 0; e < mesh.element_count(); ++e)
      l1 += mesh.elements[e].measure *
            std::abs(eval_nonlinearity_point(nl, means(e), grads.col(e)).value);
    diag.f_load_l1(k) = l1;
  }
  diag.sup_grad_q_norm = diag.grad_q_norms.maxCoeff();
  double sum = 0.0;
  for (Index k = 1; k <= K; ++k) {
    const double tau_k = traj.times(k) - traj.times(k - 1);
    sum += tau_k * diag.f_load_l1(k) * diag.f_load_l1(k);
  }
  diag.f_load_l2_time = std::sqrt(sum);
  return diag;
}

}  // namespace gradctrl
