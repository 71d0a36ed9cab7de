#pragma once

#include <cmath>
#include <random>

#include "gradctrl/kkt.hpp"
#include "gradctrl/optimizer.hpp"

namespace gradctrl::testing {

inline Vector interpolate(const Mesh& mesh, const std::function<double(double, double)>& f) {
  Vector out(mesh.node_count());
  for (int i = 0; i < mesh.node_count(); ++i)
    out(i) = f(mesh.nodes(0, i), mesh.nodes(1, i));
  return out;
}

inline Vector sine_bump(const Mesh& mesh, double height) {
  Vector out = interpolate(mesh, [&](double x, double y) {
    double v = height * std::sin(M_PI * x / mesh.lx);
    if (mesh.dimension == 2) v *= std::sin(M_PI * y / mesh.ly);
    return v;
  });
  return zero_dirichlet(mesh, out);
}

inline Vector random_field(const Mesh& mesh, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Vector out(mesh.node_count());
  for (int i = 0; i < mesh.node_count(); ++i) out(i) = normal(rng);
  return out;
}

inline Vector random_free_field(const Mesh& mesh, std::mt19937_64& rng, double scale = 1.0) {
  return zero_dirichlet(mesh, random_field(mesh, rng, scale));
}

inline Control random_control(const ProblemSpec& spec, std::mt19937_64& rng,
                              double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Control u = Control::zero(control_rows(spec.control_map, spec.mesh), spec.steps);
  for (Index k = 0; k < u.steps(); ++k)
    for (Index i = 0; i < u.rows(); ++i) u.values(i, k) = normal(rng);
  return u;
}

/// 1D problem on [0,1] with Dirichlet ends, distributed control, wide box.
inline ProblemSpec make_1d_spec(int nx, int steps, double horizon) {
  ProblemSpec spec;
  spec.mesh = build_mesh(1, {1.0}, nx, 1, {Side::Left, Side::Right});
  spec.horizon = horizon;
  spec.steps = steps;
  spec.xi = DiffusionLaw::constant(1.0);
  spec.mu = identity_coefficient(spec.mesh);
  spec.f = Nonlinearity::zero();
  spec.control_map = ControlMap::distributed(spec.mesh);
  spec.y0 = Vector::Zero(spec.mesh.node_count());
  spec.target = Matrix::Zero(spec.mesh.node_count(), 1);
  spec.gamma = 1.0;
  spec.u_low = Control::constant(spec.mesh.node_count(), steps, -1e9);
  spec.u_up = Control::constant(spec.mesh.node_count(), steps, 1e9);
  return spec;
}

inline ProblemSpec make_2d_spec(int nx, int ny, int steps, double horizon) {
  ProblemSpec spec;
  spec.mesh = build_mesh(2, {1.0, 1.0}, nx, ny,
                         {Side::Left, Side::Right, Side::Bottom, Side::Top});
  spec.horizon = horizon;
  spec.steps = steps;
  spec.xi = DiffusionLaw::constant(1.0);
  spec.mu = identity_coefficient(spec.mesh);
  spec.f = Nonlinearity::zero();
  spec.control_map = ControlMap::distributed(spec.mesh);
  spec.y0 = Vector::Zero(spec.mesh.node_count());
  spec.target = Matrix::Zero(spec.mesh.node_count(), 1);
  spec.gamma = 1.0;
  spec.u_low = Control::constant(spec.mesh.node_count(), steps, -1e9);
  spec.u_up = Control::constant(spec.mesh.node_count(), steps, 1e9);
  return spec;
}

}  // namespace gradctrl::testing
