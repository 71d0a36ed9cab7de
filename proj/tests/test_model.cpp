#include <random>

#include "doctest.h"
#include "helpers.hpp"

using namespace gradctrl;
using namespace gradctrl::testing;

TEST_CASE("eval_xi: catalog values and derivative") {
  const Mesh mesh = build_mesh(1, {1.0}, 4, 1, {});

  const auto [xi_const, dxi_const] =
      eval_xi(DiffusionLaw::constant(1.0), mesh, Vector::Random(mesh.node_count()));
  CHECK((xi_const.array() == 1.0).all());
  CHECK((dxi_const.array() == 0.0).all());

  const DiffusionLaw law = DiffusionLaw::rational_bounded(1.0, 1.0);
  const auto [xi0, dxi0] = eval_xi(law, mesh, Vector::Zero(mesh.node_count()));
  CHECK((xi0.array() - 2.0).abs().maxCoeff() < 1e-15);
  CHECK(dxi0.cwiseAbs().maxCoeff() < 1e-15);

  const auto [xi1, dxi1] = eval_xi(law, mesh, Vector::Ones(mesh.node_count()));
  CHECK((xi1.array() - 1.5).abs().maxCoeff() < 1e-15);
  CHECK((dxi1.array() + 0.5).abs().maxCoeff() < 1e-15);
}

TEST_CASE("eval_xi stays inside the declared bounds on random fields") {
  const Mesh mesh = build_mesh(2, {1.0, 1.0}, 4, 4, {});
  std::mt19937_64 rng(11);
  for (const DiffusionLaw& law :
       {DiffusionLaw::rational_bounded(0.5, 2.0), DiffusionLaw::rational_bounded(2.0, -1.0),
        DiffusionLaw::constant(3.0)}) {
    for (int trial = 0; trial < 50; ++trial) {
      const auto [xi, dxi] = eval_xi(law, mesh, random_field(mesh, rng, 5.0));
      CHECK(xi.minCoeff() >= law.xi_low - 1e-15);
      CHECK(xi.maxCoeff() <= law.xi_high + 1e-15);
      CHECK(dxi.allFinite());
    }
  }
}

TEST_CASE("diffusion law factories reject nonpositive ranges") {
  CHECK_THROWS_AS(DiffusionLaw::constant(0.0), std::invalid_argument);
  CHECK_THROWS_AS(DiffusionLaw::rational_bounded(1.0, -1.0), std::invalid_argument);
}

TEST_CASE("eval_F: trivial loads") {
  const Mesh mesh = build_mesh(1, {1.0}, 2, 1, {Side::Left, Side::Right});
  std::mt19937_64 rng(3);
  const Vector y = random_field(mesh, rng);
  const Eigen::Matrix2Xd grads = nodal_gradient(mesh, y);
  CHECK(eval_F(Nonlinearity::zero(), mesh, y, grads).cwiseAbs().maxCoeff() == 0.0);

  const Vector c = Vector::Constant(mesh.node_count(), 2.0);
  CHECK(eval_F(Nonlinearity::quad_grad(), mesh, c, nodal_gradient(mesh, c))
            .cwiseAbs()
            .maxCoeff() < 1e-15);
}

TEST_CASE("eval_F: quad_grad load of y = x is the interior hat integral") {
  const Mesh mesh = build_mesh(1, {1.0}, 2, 1, {Side::Left, Side::Right});
  const Vector y = interpolate(mesh, [](double x, double) { return x; });
  const Vector load = eval_F(Nonlinearity::quad_grad(), mesh, y, nodal_gradient(mesh, y));
  REQUIRE(load.size() == 1);
  CHECK(load(0) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("eval_F: quad_grad load invariant under constant shifts") {
  const Mesh mesh = build_mesh(2, {1.0, 1.0}, 3, 3, {Side::Left});
  std::mt19937_64 rng(5);
  const Vector y = random_field(mesh, rng);
  const Vector shifted = y.array() + 7.3;
  const Vector a = eval_F(Nonlinearity::quad_grad(), mesh, y, nodal_gradient(mesh, y));
  const Vector b =
      eval_F(Nonlinearity::quad_grad(), mesh, shifted, nodal_gradient(mesh, shifted));
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("eval_F: non-integer powers reject negative states") {
  const Mesh mesh = build_mesh(1, {1.0}, 2, 1, {});
  const Vector y = Vector::Constant(mesh.node_count(), -1.0);
  const Eigen::Matrix2Xd grads = nodal_gradient(mesh, y);
  CHECK_THROWS_AS(eval_F(Nonlinearity::kawohl(1.0, 2.5), mesh, y, grads),
                  invalid_evaluation_error);
  CHECK_THROWS_AS(eval_F(Nonlinearity::power_sum(0.0, 1.0, 2.0, 1.5), mesh, y, grads),
                  invalid_evaluation_error);
  // integer powers of negative states are fine
  CHECK_NOTHROW(eval_F(Nonlinearity::kawohl(1.0, 3.0), mesh, y, grads));
}

namespace {

// Central finite differences of eval_F, the oracle for the analytic Jacobian.
double jacobian_fd_error(const Nonlinearity& nl, const Mesh& mesh, const Vector& y,
                         std::mt19937_64& rng, int directions) {
  const SparseMatrix J = eval_F_jacobian(nl, mesh, y, nodal_gradient(mesh, y));
  const double eps = 1e-6;
  double worst = 0.0;
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < directions; ++trial) {
    Vector h(mesh.node_count());
    for (int i = 0; i < mesh.node_count(); ++i) h(i) = normal(rng);
    h = zero_dirichlet(mesh, h);
    const Vector yp = y + eps * h, ym = y - eps * h;
    const Vector fd = (eval_F(nl, mesh, yp, nodal_gradient(mesh, yp)) -
                       eval_F(nl, mesh, ym, nodal_gradient(mesh, ym))) /
                      (2.0 * eps);
    const Vector jh = J * mesh.restrict_free(h);
    worst = std::max(worst, (fd - jh).norm() / std::max(1e-10, jh.norm()));
  }
  return worst;
}

}  // namespace

TEST_CASE("eval_F_jacobian matches finite differences for every catalog entry") {
  const Mesh mesh = build_mesh(2, {1.0, 1.0}, 3, 3, {Side::Left, Side::Right});
  std::mt19937_64 rng(17);
  const Vector y_signed = random_field(mesh, rng, 0.7);
  const Vector y_positive = y_signed.cwiseAbs().array() + 0.5;

  CHECK(jacobian_fd_error(Nonlinearity::quad_grad(), mesh, y_signed, rng, 20) < 1e-6);
  CHECK(jacobian_fd_error(Nonlinearity::advect(Vector2(1.0, -0.5)), mesh, y_signed, rng, 20) <
        1e-6);
  CHECK(jacobian_fd_error(Nonlinearity::kawohl(5.0, 3.0), mesh, y_signed, rng, 20) < 1e-6);
  CHECK(jacobian_fd_error(Nonlinearity::kawohl(2.0, 2.5), mesh, Vector(y_positive), rng, 20) <
        1e-6);
  CHECK(jacobian_fd_error(Nonlinearity::power_sum(0.5, 1.5, 2.5, 2.0), mesh,
                          Vector(y_positive), rng, 20) < 1e-6);

  // Zero entries
  CHECK(Matrix(eval_F_jacobian(Nonlinearity::zero(), mesh, y_signed,
                               nodal_gradient(mesh, y_signed)))
            .cwiseAbs()
            .maxCoeff() == 0.0);
  const Vector zero = Vector::Zero(mesh.node_count());
  CHECK(Matrix(eval_F_jacobian(Nonlinearity::quad_grad(), mesh, zero,
                               nodal_gradient(mesh, zero)))
            .cwiseAbs()
            .maxCoeff() < 1e-15);
}

TEST_CASE("apply_B and apply_B_adjoint satisfy the discrete transpose identity") {
  std::mt19937_64 rng(23);

  // Distributed control on a node subset
  ProblemSpec spec = make_1d_spec(8, 5, 0.5);
  std::vector<uint8_t> region(static_cast<size_t>(spec.mesh.node_count()), 0);
  for (size_t i = 2; i <= 6; ++i) region[i] = 1;
  spec.control_map = ControlMap::distributed(spec.mesh, region);
  const Discretization disc = discretize(spec);

  for (int trial = 0; trial < 30; ++trial) {
    const Control u = random_control(spec, rng);
    std::vector<Vector> w(spec.steps);
    for (int k = 0; k < spec.steps; ++k) {
      w[k].resize(spec.mesh.free_count());
      for (Index i = 0; i < w[k].size(); ++i)
        w[k](i) = std::normal_distribution<double>()(rng);
    }
    const std::vector<Vector> loads = apply_B(spec, disc, u);
    double lhs = 0.0;
    for (int k = 0; k < spec.steps; ++k) lhs += disc.tau * loads[k].dot(w[k]);
    const double rhs = control_inner(spec, disc, u, apply_B_adjoint(spec, disc, w));
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
  }

  // Time-only control with a fixed actuator
  ProblemSpec tspec = make_1d_spec(8, 5, 0.5);
  tspec.control_map = ControlMap::time_only(sine_bump(tspec.mesh, 1.0));
  tspec.u_low = Control::constant(1, tspec.steps, -1e9);
  tspec.u_up = Control::constant(1, tspec.steps, 1e9);
  const Discretization tdisc = discretize(tspec);
  for (int trial = 0; trial < 30; ++trial) {
    const Control u = random_control(tspec, rng);
    std::vector<Vector> w(tspec.steps);
    for (int k = 0; k < tspec.steps; ++k) {
      w[k].resize(tspec.mesh.free_count());
      for (Index i = 0; i < w[k].size(); ++i)
        w[k](i) = std::normal_distribution<double>()(rng);
    }
    const std::vector<Vector> loads = apply_B(tspec, tdisc, u);
    double lhs = 0.0;
    for (int k = 0; k < tspec.steps; ++k) lhs += tdisc.tau * loads[k].dot(w[k]);
    const double rhs = control_inner(tspec, tdisc, u, apply_B_adjoint(tspec, tdisc, w));
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
  }
}

TEST_CASE("apply_B trivial cases and shape checks") {
  ProblemSpec spec = make_1d_spec(4, 3, 1.0);
  const Discretization disc = discretize(spec);
  const auto zero_loads = apply_B(spec, disc, Control::zero(spec.mesh.node_count(), 3));
  for (const Vector& l : zero_loads) CHECK(l.cwiseAbs().maxCoeff() == 0.0);

  ProblemSpec tspec = make_1d_spec(4, 3, 1.0);
  tspec.control_map = ControlMap::time_only(Vector::Zero(tspec.mesh.node_count()));
  const Discretization tdisc = discretize(tspec);
  const auto loads = apply_B(tspec, tdisc, Control::constant(1, 3, 2.0));
  for (const Vector& l : loads) CHECK(l.cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(apply_B(spec, disc, Control::zero(2, 3)), std::invalid_argument);
  CHECK_THROWS_AS(apply_B(spec, disc, Control::zero(spec.mesh.node_count(), 5)),
                  std::invalid_argument);
}
