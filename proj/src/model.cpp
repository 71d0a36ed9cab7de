#include "gradctrl/model.hpp"

#include <cmath>

namespace gradctrl {

namespace {

bool is_integral(double x) { return x == std::floor(x); }

// y^p with the catalog domain rule: negative bases require integral powers.
double checked_pow(double y, double p, const char* what) {
  if (y < 0.0 && !is_integral(p))
    throw invalid_evaluation_error(std::string(what) +
                                   ": negative state with non-integer power");
  return std::pow(y, p);
}

}  // namespace

DiffusionLaw DiffusionLaw::constant(double value) {
  if (!(value > 0.0)) throw std::invalid_argument("diffusion constant must be positive");
  DiffusionLaw law;
  law.kind = Kind::Constant;
  law.c = value;
  law.xi_low = law.xi_high = value;
  return law;
}

DiffusionLaw DiffusionLaw::rational_bounded(double a, double b) {
  DiffusionLaw law;
  law.kind = Kind::RationalBounded;
  law.a = a;
  law.b = b;
  law.xi_low = std::min(a, a + b);
  law.xi_high = std::max(a, a + b);
  if (!(law.xi_low > 0.0))
    throw std::invalid_argument("rational diffusion law must stay positive (min(a,a+b) > 0)");
  return law;
}

double DiffusionLaw::value(double y) const {
  switch (kind) {
    case Kind::Constant: return c;
    case Kind::RationalBounded: return a + b / (1.0 + y * y);
  }
  return c;
}

double DiffusionLaw::derivative(double y) const {
  switch (kind) {
    case Kind::Constant: return 0.0;
    case Kind::RationalBounded: {
      const double d = 1.0 + y * y;
      return -2.0 * b * y / (d * d);
    }
  }
  return 0.0;
}

Nonlinearity Nonlinearity::zero() { return {}; }

Nonlinearity Nonlinearity::quad_grad() {
  Nonlinearity nl;
  nl.kind = Kind::QuadGrad;
  return nl;
}

Nonlinearity Nonlinearity::advect(const Vector2& beta) {
  Nonlinearity nl;
  nl.kind = Kind::Advect;
  nl.beta = beta;
  return nl;
}

Nonlinearity Nonlinearity::kawohl(double lambda, double r) {
  if (!(r >= 1.0)) throw std::invalid_argument("kawohl exponent r must be >= 1");
  Nonlinearity nl;
  nl.kind = Kind::Kawohl;
  nl.lambda = lambda;
  nl.r = r;
  return nl;
}

Nonlinearity Nonlinearity::power_sum(double a, double b, double alpha, double beta_pow) {
  if (a < 0.0 || b < 0.0) throw std::invalid_argument("power_sum weights must be >= 0");
  if (!(alpha >= 1.0) || !(beta_pow >= 1.0))
    throw std::invalid_argument("power_sum exponents must be >= 1");
  Nonlinearity nl;
  nl.kind = Kind::PowerSum;
  nl.a = a;
  nl.b = b;
  nl.alpha = alpha;
  nl.beta_pow = beta_pow;
  return nl;
}

NonlinearityPoint eval_nonlinearity_point(const Nonlinearity& nl, double y_mean,
                                          const Vector2& grad) {
  NonlinearityPoint out;
  switch (nl.kind) {
    case Nonlinearity::Kind::Zero:
      break;
    case Nonlinearity::Kind::QuadGrad:
      out.value = grad.squaredNorm();
      out.d_grad = 2.0 * grad;
      break;
    case Nonlinearity::Kind::Advect: {
      const double bg = nl.beta.dot(grad);
      out.value = y_mean * bg;
      out.d_mean = bg;
      out.d_grad = y_mean * nl.beta;
      break;
    }
    case Nonlinearity::Kind::Kawohl:
      out.value = nl.lambda * checked_pow(y_mean, nl.r, "kawohl") - grad.squaredNorm();
      out.d_mean = nl.lambda * nl.r * checked_pow(y_mean, nl.r - 1.0, "kawohl");
      out.d_grad = -2.0 * grad;
      break;
    case Nonlinearity::Kind::PowerSum: {
      const double n2 = grad.squaredNorm();
      const double norm = std::sqrt(n2);
      out.value = nl.a * std::pow(norm, nl.alpha) +
                  nl.b * checked_pow(y_mean, nl.beta_pow, "power_sum");
      out.d_mean = nl.b * nl.beta_pow * checked_pow(y_mean, nl.beta_pow - 1.0, "power_sum");
      out.d_grad = norm > 0.0 ? Vector2(nl.a * nl.alpha * std::pow(norm, nl.alpha - 2.0) * grad)
                              : Vector2::Zero();
      break;
    }
  }
  return out;
}

std::pair<Vector, Vector> eval_xi(const DiffusionLaw& law, const Mesh& mesh,
                                  const Vector& y_full) {
  const Vector means = element_means(mesh, y_full);
  Vector xi(mesh.element_count()), dxi(mesh.element_count());
  for (int e = 0; e < mesh.element_count(); ++e) {
    xi(e) = law.value(means(e));
    dxi(e) = law.derivative(means(e));
  }
  return {xi, dxi};
}

Vector eval_F(const Nonlinearity& nl, const Mesh& mesh, const Vector& y_full,
              const Eigen::Matrix2Xd& grads) {
  const int nf = mesh.free_count();
  Vector load = Vector::Zero(nf);
  if (nl.is_zero()) return load;
  const int nv = mesh.dimension + 1;
  const Vector means = element_means(mesh, y_full);
  for (int e = 0; e < mesh.element_count(); ++e) {
    const Element& el = mesh.elements[e];
    const NonlinearityPoint f = eval_nonlinearity_point(nl, means(e), grads.col(e));
    const double w = el.measure / nv;  // integral of each hat over the element
    for (int a = 0; a < nv; ++a) {
      const int i = mesh.free_index[el.vertices[a]];
      if (i >= 0) load(i) += w * f.value;
    }
  }
  return load;
}

SparseMatrix eval_F_jacobian(const Nonlinearity& nl, const Mesh& mesh,
                             const Vector& y_full, const Eigen::Matrix2Xd& grads) {
  const int nf = mesh.free_count();
  SparseMatrix J(nf, nf);
  if (nl.is_zero()) return J;
  const int nv = mesh.dimension + 1;
  const Vector means = element_means(mesh, y_full);
  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<size_t>(mesh.element_count()) * nv * nv);
  for (int e = 0; e < mesh.element_count(); ++e) {
    const Element& el = mesh.elements[e];
    const NonlinearityPoint f = eval_nonlinearity_point(nl, means(e), grads.col(e));
    const double w = el.measure / nv;
    for (int b = 0; b < nv; ++b) {
      const int j = mesh.free_index[el.vertices[b]];
      if (j < 0) continue;
      // dF_e/dy_j through the element mean and the P1 gradient
      const double dfe = f.d_mean / nv + f.d_grad.dot(el.basis_gradients.col(b));
      for (int a = 0; a < nv; ++a) {
        const int i = mesh.free_index[el.vertices[a]];
        if (i >= 0) triplets.emplace_back(i, j, w * dfe);
      }
    }
  }
  J.setFromTriplets(triplets.begin(), triplets.end());
  return J;
}

ControlMap ControlMap::distributed(const Mesh& mesh) {
  return distributed(mesh, std::vector<uint8_t>(mesh.node_count(), 1));
}

ControlMap ControlMap::distributed(const Mesh& mesh, std::vector<uint8_t> region) {
  if (region.size() != static_cast<size_t>(mesh.node_count()))
    throw std::invalid_argument("control region indicator must cover all mesh nodes");
  ControlMap cm;
  cm.kind = Kind::Distributed;
  cm.region = std::move(region);
  return cm;
}

ControlMap ControlMap::time_only(Vector actuator) {
  if (!actuator.allFinite())
    throw std::invalid_argument("actuator field must be finite");
  ControlMap cm;
  cm.kind = Kind::TimeOnly;
  cm.actuator = std::move(actuator);
  return cm;
}

Index control_rows(const ControlMap& cm, const Mesh& mesh) {
  return cm.kind == ControlMap::Kind::Distributed ? mesh.node_count() : 1;
}

}  // namespace gradctrl
