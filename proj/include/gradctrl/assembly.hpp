#pragma once

#include <vector>

#include "gradctrl/mesh.hpp"

namespace gradctrl {

/// Per-element d x d coefficient matrices (stored as 2x2, upper-left block
/// used in 1D).
using CoefficientField = std::vector<Matrix2>;

CoefficientField identity_coefficient(const Mesh& mesh, double scale = 1.0);

/// Stiffness K[i][j] = sum_e measure(e) (coeff_e grad phi_j) . grad phi_i
/// over the free nodes (Dirichlet rows/columns eliminated, zero boundary
/// data). Coefficients must be symmetric positive semidefinite.
SparseMatrix assemble_stiffness(const Mesh& mesh, const CoefficientField& coeff);

/// Stiffness with per-element scalar factors applied to a base coefficient
/// field, K(s) = sum_e measure(e) s_e (coeff_e grad phi_j) . grad phi_i.
/// No SPD validation; the scale may be signed (linearization terms).
SparseMatrix assemble_scaled_stiffness(const Mesh& mesh, const CoefficientField& coeff,
                                       const Vector& element_scale);

/// Consistent P1 mass matrix over all nodes.
SparseMatrix assemble_mass(const Mesh& mesh);

/// Row sums of the consistent mass matrix: the nodal share of the measure.
Vector lumped_mass(const Mesh& mesh);

/// Gradient of the P1 interpolant, one d-vector per element (exact for P1).
Eigen::Matrix2Xd nodal_gradient(const Mesh& mesh, const Vector& y_full);

/// Element means of a full nodal field.
Vector element_means(const Mesh& mesh, const Vector& y_full);

/// Extract the free-node principal submatrix of a full n x n operator.
SparseMatrix restrict_free(const Mesh& mesh, const SparseMatrix& full);

}  // namespace gradctrl
