#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <stdexcept>
#include <string>

namespace gradctrl {

using Scalar = double;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Vector2 = Eigen::Vector2d;
using Matrix2 = Eigen::Matrix2d;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;
using Index = Eigen::Index;

/// Time-indexed nodal fields on the space-time cylinder. Column k holds the
/// state at time times[k]; Dirichlet nodes are zero at all times.
struct Trajectory {
  Vector times;   // t_0 = 0 < ... < t_K
  Matrix states;  // node_count x (K+1)

  Index step_count() const { return times.size() - 1; }
  double horizon() const { return times(times.size() - 1); }
};

/// Model evaluation left the domain of the catalog formula (e.g. a negative
/// state raised to a non-integer power).
class invalid_evaluation_error : public std::runtime_error {
 public:
  explicit invalid_evaluation_error(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace gradctrl
