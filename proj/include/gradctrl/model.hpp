#pragma once

#include <utility>
#include <vector>

#include "gradctrl/assembly.hpp"

namespace gradctrl {

/// Scalar diffusion law with global positive bounds and Lipschitz derivative.
struct DiffusionLaw {
  enum class Kind { Constant, RationalBounded };
  Kind kind = Kind::Constant;
  double c = 1.0;          // Constant
  double a = 1.0, b = 1.0; // RationalBounded: xi(y) = a + b/(1+y^2)
  double xi_low = 1.0, xi_high = 1.0;

  static DiffusionLaw constant(double value);
  static DiffusionLaw rational_bounded(double a, double b);

  double value(double y) const;
  double derivative(double y) const;
};

/// First-order nonlinearity catalog, evaluated at the element mean of y and
/// the elementwise constant gradient.
struct Nonlinearity {
  enum class Kind { Zero, QuadGrad, Advect, Kawohl, PowerSum };
  Kind kind = Kind::Zero;
  Vector2 beta = Vector2::Zero();          // Advect: F = y beta . grad y
  double lambda = 0.0, r = 2.0;            // Kawohl: F = lambda y^r - |grad y|^2
  double a = 0.0, b = 0.0;                 // PowerSum: F = a |grad y|^alpha + b y^beta_pow
  double alpha = 2.0, beta_pow = 2.0;

  static Nonlinearity zero();
  static Nonlinearity quad_grad();
  static Nonlinearity advect(const Vector2& beta);
  static Nonlinearity kawohl(double lambda, double r);
  static Nonlinearity power_sum(double a, double b, double alpha, double beta_pow);

  bool is_zero() const { return kind == Kind::Zero; }
};

/// Pointwise nonlinearity evaluation: value and partials with respect to the
/// element-mean state and the gradient vector.
struct NonlinearityPoint {
  double value = 0.0;
  double d_mean = 0.0;
  Vector2 d_grad = Vector2::Zero();
};

NonlinearityPoint eval_nonlinearity_point(const Nonlinearity& nl, double y_mean,
                                          const Vector2& grad);

/// Per-element xi and xi' at the element mean of y.
std::pair<Vector, Vector> eval_xi(const DiffusionLaw& law, const Mesh& mesh,
                                  const Vector& y_full);

/// One-point-quadrature load of F: load[i] = sum_e measure(e)/(d+1) F_e over
/// elements containing i, restricted to free nodes.
Vector eval_F(const Nonlinearity& nl, const Mesh& mesh, const Vector& y_full,
              const Eigen::Matrix2Xd& grads);

/// Exact derivative of eval_F with respect to free nodal values.
SparseMatrix eval_F_jacobian(const Nonlinearity& nl, const Mesh& mesh,
                             const Vector& y_full, const Eigen::Matrix2Xd& grads);

/// Control action: distributed space-time field masked by a node-indicator
/// region, or a time signal driving a fixed spatial actuator.
struct ControlMap {
  enum class Kind { Distributed, TimeOnly };
  Kind kind = Kind::Distributed;
  std::vector<uint8_t> region;  // Distributed: indicator per node
  Vector actuator;              // TimeOnly: nodal field

  static ControlMap distributed(const Mesh& mesh);
  static ControlMap distributed(const Mesh& mesh, std::vector<uint8_t> region);
  static ControlMap time_only(Vector actuator);
};

/// Control coefficients: column k holds the value on the step (t_k, t_{k+1}]
/// for k = 0..N-1; rows are nodes (distributed) or a single signal (time
/// only).
struct Control {
  Matrix values;

  Index rows() const { return values.rows(); }
  Index steps() const { return values.cols(); }
  static Control zero(Index rows, Index steps) { return {Matrix::Zero(rows, steps)}; }
  static Control constant(Index rows, Index steps, double v) {
    return {Matrix::Constant(rows, steps, v)};
  }
};

Index control_rows(const ControlMap& cm, const Mesh& mesh);

}  // namespace gradctrl
