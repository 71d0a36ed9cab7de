#include "gradctrl/assembly.hpp"

#include <cmath>

namespace gradctrl {

namespace {

void check_spsd(const Mesh& mesh, const CoefficientField& coeff) {
  if (coeff.size() != static_cast<size_t>(mesh.element_count()))
    throw std::invalid_argument("coefficient field length must match element count");
  for (const Matrix2& m : coeff) {
    const double scale = m.cwiseAbs().maxCoeff();
    const double tol = 1e-12 * std::max(1.0, scale);
    if (mesh.dimension == 1) {
      if (m(0, 0) < -tol)
        throw std::invalid_argument("coefficient must be symmetric positive semidefinite");
      continue;
    }
    if (std::abs(m(0, 1) - m(1, 0)) > tol)
      throw std::invalid_argument("coefficient matrix must be symmetric");
    // 2x2 PSD: nonnegative trace and determinant
    if (m.trace() < -tol || m.determinant() < -tol * std::max(1.0, scale))
      throw std::invalid_argument("coefficient must be symmetric positive semidefinite");
  }
}

}  // namespace

CoefficientField identity_coefficient(const Mesh& mesh, double scale) {
  return CoefficientField(mesh.element_count(), scale * Matrix2::Identity());
}

SparseMatrix assemble_scaled_stiffness(const Mesh& mesh, const CoefficientField& coeff,
                                       const Vector& element_scale) {
  if (coeff.size() != static_cast<size_t>(mesh.element_count()))
    throw std::invalid_argument("coefficient field length must match element count");
  const int nv = mesh.dimension + 1;
  const int nf = mesh.free_count();
  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<size_t>(mesh.element_count()) * nv * nv);
  for (int e = 0; e < mesh.element_count(); ++e) {
    const Element& el = mesh.elements[e];
    const double w = el.measure * element_scale(e);
    for (int a = 0; a < nv; ++a) {
      const int i = mesh.free_index[el.vertices[a]];
      if (i < 0) continue;
      for (int b = 0; b < nv; ++b) {
        const int j = mesh.free_index[el.vertices[b]];
        if (j < 0) continue;
        const double v =
            w * el.basis_gradients.col(a).dot(coeff[e] * el.basis_gradients.col(b));
        triplets.emplace_back(i, j, v);
      }
    }
  }
  SparseMatrix K(nf, nf);
  K.setFromTriplets(triplets.begin(), triplets.end());
  return K;
}

SparseMatrix assemble_stiffness(const Mesh& mesh, const CoefficientField& coeff) {
  check_spsd(mesh, coeff);
  return assemble_scaled_stiffness(mesh, coeff, Vector::Ones(mesh.element_count()));
}

SparseMatrix assemble_mass(const Mesh& mesh) {
  const int nv = mesh.dimension + 1;
  const int n = mesh.node_count();
  // Exact P1 simplex mass: measure/(nv(nv+1)) * (1 + delta_ab)
  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<size_t>(mesh.element_count()) * nv * nv);
  for (const Element& el : mesh.elements) {
    const double base = el.measure / (nv * (nv + 1.0));
    for (int a = 0; a < nv; ++a)
      for (int b = 0; b < nv; ++b)
        triplets.emplace_back(el.vertices[a], el.vertices[b], base * (a == b ? 2.0 : 1.0));
  }
  SparseMatrix M(n, n);
  M.setFromTriplets(triplets.begin(), triplets.end());
  return M;
}

Vector lumped_mass(const Mesh& mesh) {
  const int nv = mesh.dimension + 1;
  Vector lumped = Vector::Zero(mesh.node_count());
  for (const Element& el : mesh.elements)
    for (int a = 0; a < nv; ++a) lumped(el.vertices[a]) += el.measure / nv;
  return lumped;
}

Eigen::Matrix2Xd nodal_gradient(const Mesh& mesh, const Vector& y_full) {
  if (y_full.size() != mesh.node_count())
    throw std::invalid_argument("nodal field length must match node count");
  const int nv = mesh.dimension + 1;
  Eigen::Matrix2Xd grads = Eigen::Matrix2Xd::Zero(2, mesh.element_count());
  for (int e = 0; e < mesh.element_count(); ++e) {
    const Element& el = mesh.elements[e];
    for (int a = 0; a < nv; ++a)
      grads.col(e) += y_full(el.vertices[a]) * el.basis_gradients.col(a);
  }
  return grads;
}

Vector element_means(const Mesh& mesh, const Vector& y_full) {
  const int nv = mesh.dimension + 1;
  Vector means(mesh.element_count());
  for (int e = 0; e < mesh.element_count(); ++e) {
    const Element& el = mesh.elements[e];
    double s = 0.0;
    for (int a = 0; a < nv; ++a) s += y_full(el.vertices[a]);
    means(e) = s / nv;
  }
  return means;
}

SparseMatrix restrict_free(const Mesh& mesh, const SparseMatrix& full) {
  const int nf = mesh.free_count();
  std::vector<Triplet> triplets;
  for (int col = 0; col < full.outerSize(); ++col) {
    const int j = mesh.free_index[col];
    if (j < 0) continue;
    for (SparseMatrix::InnerIterator it(full, col); it; ++it) {
      const int i = mesh.free_index[it.row()];
      if (i >= 0) triplets.emplace_back(i, j, it.value());
    }
  }
  SparseMatrix out(nf, nf);
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

}  // namespace gradctrl
