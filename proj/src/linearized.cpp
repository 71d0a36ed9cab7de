#include "gradctrl/linearized.hpp"

#include <Eigen/SparseLU>

namespace gradctrl {

namespace {

// Coupling from the quasilinear coefficient: entries
// sum_e measure(e) xi'(y)_e mean_e(phi_j) (mu_e grad y|_e) . grad phi_i.
SparseMatrix assemble_xi_coupling(const Mesh& mesh, const CoefficientField& mu,
                                  const Vector& dxi, const Eigen::Matrix2Xd& grads) {
  const int nv = mesh.dimension + 1;
  const int nf = mesh.free_count();
  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<size_t>(mesh.element_count()) * nv * nv);
  for (int e = 0; e < mesh.element_count(); ++e) {
    if (dxi(e) == 0.0) continue;
    const Element& el = mesh.elements[e];
    const Vector2 flux = mu[e] * grads.col(e);
    const double w = el.measure * dxi(e) / nv;
    for (int a = 0; a < nv; ++a) {
      const int i = mesh.free_index[el.vertices[a]];
      if (i < 0) continue;
      const double row_val = w * el.basis_gradients.col(a).dot(flux);
      for (int b = 0; b < nv; ++b) {
        const int j = mesh.free_index[el.vertices[b]];
        if (j >= 0) triplets.emplace_back(i, j, row_val);
      }
    }
  }
  SparseMatrix B(nf, nf);
  B.setFromTriplets(triplets.begin(), triplets.end());
  return B;
}

}  // namespace

SparseMatrix linearized_operator(const ProblemSpec& spec, const Discretization& disc,
                                 const Vector& y_full, double tau) {
  const Mesh& mesh = spec.mesh;
  const auto [xi, dxi] = eval_xi(spec.xi, mesh, y_full);
  const Eigen::Matrix2Xd grads = nodal_gradient(mesh, y_full);
  SparseMatrix L = disc.mass_free / tau;
  L += assemble_scaled_stiffness(mesh, spec.mu, xi);
  L += assemble_xi_coupling(mesh, spec.mu, dxi, grads);
  if (!spec.f.is_zero()) L -= eval_F_jacobian(spec.f, mesh, y_full, grads);
  return L;
}

LinearizedSystem::LinearizedSystem(const ProblemSpec& spec, const Discretization& disc,
                                   const Trajectory& traj)
    : spec_(&spec), disc_(&disc) {
  const Index N = traj.step_count();
  if (N != spec.steps)
    throw std::invalid_argument("linearization requires a global trajectory");
  blocks_.reserve(N);
  factors_.reserve(N);
  for (Index k = 1; k <= N; ++k) {
    blocks_.push_back(linearized_operator(spec, disc, traj.states.col(k), disc.tau));
    auto lu = std::make_unique<Eigen::SparseLU<SparseMatrix>>();
    lu->compute(blocks_.back());
    if (lu->info() != Eigen::Success)
      throw std::runtime_error("linearized step operator is singular at step " +
                               std::to_string(k));
    factors_.push_back(std::move(lu));
  }
}

std::vector<Vector> LinearizedSystem::forward(const std::vector<Vector>& loads) const {
  const Index N = steps();
  if (loads.size() != static_cast<size_t>(N))
    throw std::invalid_argument("forward solve needs one load per step");
  const double tau = disc_->tau;
  std::vector<Vector> z(N);
  Vector prev = Vector::Zero(disc_->mass_free.rows());
  for (Index k = 0; k < N; ++k) {
    const Vector rhs = disc_->mass_free * prev / tau + loads[k];
    z[k] = factors_[k]->solve(rhs);
    prev = z[k];
  }
  return z;
}

std::vector<Vector> LinearizedSystem::adjoint(const std::vector<Vector>& running_duals,
                                              const Vector& terminal_dual) const {
  const Index N = steps();
  if (running_duals.size() != static_cast<size_t>(N))
    throw std::invalid_argument("adjoint solve needs one dual per step");
  const double tau = disc_->tau;
  std::vector<Vector> w(N);
  Vector carry = terminal_dual.size() ? terminal_dual : Vector::Zero(disc_->mass_free.rows());
  for (Index k = N - 1; k >= 0; --k) {
    const Vector rhs = running_duals[k] + carry;
    w[k] = factors_[k]->transpose().solve(rhs);
    if (k > 0) carry = disc_->mass_free * w[k] / tau;
  }
  return w;
}

Trajectory LinearizedSystem::to_trajectory(const std::vector<Vector>& z_free) const {
  const Index N = steps();
  Trajectory traj;
  traj.times = Vector::LinSpaced(N + 1, 0.0, spec_->horizon);
  traj.states.resize(spec_->mesh.node_count(), N + 1);
  traj.states.col(0).setZero();
  for (Index k = 0; k < N; ++k) traj.states.col(k + 1) = spec_->mesh.scatter_free(z_free[k]);
  return traj;
}

Trajectory solve_sensitivity(const ProblemSpec& spec, const Discretization& disc,
                             const Trajectory& traj, const Control& v) {
  LinearizedSystem system(spec, disc, traj);
  return system.to_trajectory(system.forward(apply_B(spec, disc, v)));
}

std::vector<Vector> solve_adjoint(const ProblemSpec& spec, const Discretization& disc,
                                  const Trajectory& traj,
                                  const std::vector<Vector>& running_duals,
                                  const Vector& terminal_dual) {
  return LinearizedSystem(spec, disc, traj).adjoint(running_duals, terminal_dual);
}

double objective_value(const ProblemSpec& spec, const Discretization& disc,
                       const Control& u, const Trajectory& traj) {
  double tracking = 0.0;
  for (Index k = 1; k <= spec.steps; ++k) {
    const Vector diff = traj.states.col(k) - spec.target_at(k);
    tracking += disc.tau * diff.dot(disc.mass_full * diff);
  }
  return 0.5 * tracking + 0.5 * spec.gamma * control_inner(spec, disc, u, u);
}

Control reduced_gradient(const ProblemSpec& spec, const Discretization& disc,
                         const Control& u, const Trajectory& traj,
                         const DualData& constraint_duals) {
  const Index N = spec.steps;
  const bool extra = !constraint_duals.running.empty();
  if (extra && constraint_duals.running.size() != static_cast<size_t>(N))
    throw std::invalid_argument("constraint duals must cover every step");
  // Duals enter as time densities: the constraint duals are exact state
  // derivatives carrying the tau quadrature weight, so they get 1/tau here;
  // the step-weighted control pairing in B* restores it.
  std::vector<Vector> duals(N);
  for (Index k = 1; k <= N; ++k) {
    const Vector diff = traj.states.col(k) - spec.target_at(k);
    duals[k - 1] = spec.mesh.restrict_free(disc.mass_full * diff);
    if (extra && constraint_duals.running[k - 1].size())
      duals[k - 1] += constraint_duals.running[k - 1] / disc.tau;
  }
  Vector terminal;
  if (constraint_duals.terminal.size())
    terminal = constraint_duals.terminal / disc.tau;
  const std::vector<Vector> w = solve_adjoint(spec, disc, traj, duals, terminal);
  Control grad = apply_B_adjoint(spec, disc, w);
  grad.values = spec.gamma * u.values + grad.values;
  return grad;
}

Control reduced_gradient(const ProblemSpec& spec, const Discretization& disc,
                         const Control& u, const Trajectory& traj) {
  return reduced_gradient(spec, disc, u, traj, DualData{});
}

}  // namespace gradctrl
