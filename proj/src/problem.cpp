#include "gradctrl/problem.hpp"

namespace gradctrl {

void ProblemSpec::validate() const {
  if (!(horizon > 0.0)) throw std::invalid_argument("time horizon must be positive");
  if (steps < 1) throw std::invalid_argument("step count must be >= 1");
  if (!(gamma > 0.0)) throw std::invalid_argument("tikhonov weight gamma must be positive");
  if (mu.size() != static_cast<size_t>(mesh.element_count()))
    throw std::invalid_argument("coefficient field mu must have one matrix per element");
  if (y0.size() != mesh.node_count())
    throw std::invalid_argument("initial state length must match node count");
  for (int i = 0; i < mesh.node_count(); ++i)
    if (mesh.is_dirichlet(i) && y0(i) != 0.0)
      throw std::invalid_argument("initial state must vanish on Dirichlet nodes");
  if (target.rows() != mesh.node_count() ||
      (target.cols() != 1 && target.cols() != steps + 1))
    throw std::invalid_argument("target must be node_count x 1 or node_count x (steps+1)");

  const Index rows = control_rows(control_map, mesh);
  if (u_low.rows() != rows || u_low.steps() != steps || u_up.rows() != rows ||
      u_up.steps() != steps)
    throw std::invalid_argument("control bounds must be control_rows x steps");
  if ((u_low.values.array() > u_up.values.array()).any())
    throw std::invalid_argument("control bounds require u_low <= u_up everywhere");
  if (control_map.kind == ControlMap::Kind::TimeOnly &&
      control_map.actuator.size() != mesh.node_count())
    throw std::invalid_argument("actuator length must match node count");

  constraints.validate(mesh);
}

Discretization discretize(const ProblemSpec& spec) {
  Discretization disc;
  disc.mass_full = assemble_mass(spec.mesh);
  disc.mass_free = restrict_free(spec.mesh, disc.mass_full);
  disc.lumped = lumped_mass(spec.mesh);
  disc.tau = spec.tau();
  if (spec.control_map.kind == ControlMap::Kind::TimeOnly) {
    const Vector load = disc.mass_full * spec.control_map.actuator;
    disc.actuator_load_free = spec.mesh.restrict_free(load);
  }
  return disc;
}

Vector zero_dirichlet(const Mesh& mesh, Vector y) {
  for (int i = 0; i < mesh.node_count(); ++i)
    if (mesh.is_dirichlet(i)) y(i) = 0.0;
  return y;
}

std::vector<Vector> apply_B(const ProblemSpec& spec, const Discretization& disc,
                            const Control& u) {
  const Index rows = control_rows(spec.control_map, spec.mesh);
  if (u.rows() != rows || u.steps() != spec.steps)
    throw std::invalid_argument("control shape must be control_rows x steps");
  std::vector<Vector> loads(spec.steps);
  if (spec.control_map.kind == ControlMap::Kind::Distributed) {
    Vector weighted(spec.mesh.node_count());
    for (int k = 0; k < spec.steps; ++k) {
      for (int i = 0; i < spec.mesh.node_count(); ++i)
        weighted(i) = spec.control_map.region[i] ? disc.lumped(i) * u.values(i, k) : 0.0;
      loads[k] = spec.mesh.restrict_free(weighted);
    }
  } else {
    for (int k = 0; k < spec.steps; ++k)
      loads[k] = u.values(0, k) * disc.actuator_load_free;
  }
  return loads;
}

Control apply_B_adjoint(const ProblemSpec& spec, const Discretization& disc,
                        const std::vector<Vector>& w) {
  if (w.size() != static_cast<size_t>(spec.steps))
    throw std::invalid_argument("adjoint trajectory must have one vector per step");
  const Index rows = control_rows(spec.control_map, spec.mesh);
  Control out = Control::zero(rows, spec.steps);
  if (spec.control_map.kind == ControlMap::Kind::Distributed) {
    for (int k = 0; k < spec.steps; ++k) {
      const Vector wk = spec.mesh.scatter_free(w[k]);
      for (int i = 0; i < spec.mesh.node_count(); ++i)
        if (spec.control_map.region[i]) out.values(i, k) = wk(i);
    }
  } else {
    for (int k = 0; k < spec.steps; ++k)
      out.values(0, k) = disc.actuator_load_free.dot(w[k]);
  }
  return out;
}

double control_inner(const ProblemSpec& spec, const Discretization& disc,
                     const Control& u, const Control& v) {
  if (u.rows() != v.rows() || u.steps() != v.steps())
    throw std::invalid_argument("control shapes must agree");
  double sum = 0.0;
  if (spec.control_map.kind == ControlMap::Kind::Distributed) {
    for (Index k = 0; k < u.steps(); ++k)
      sum += disc.lumped.dot(u.values.col(k).cwiseProduct(v.values.col(k)));
  } else {
    sum = (u.values.array() * v.values.array()).sum();
  }
  return disc.tau * sum;
}

}  // namespace gradctrl
