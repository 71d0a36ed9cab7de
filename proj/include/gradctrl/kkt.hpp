#pragma once

#include <optional>

#include "gradctrl/optimizer.hpp"

namespace gradctrl {

struct KKTTolerances {
  double stationarity = 1e-4;
  double complementarity = 1e-4;
  double multiplier_nonneg = 1e-6;  // allowed slack below zero
  double feasibility = 1e-4;
  double tol_active = 1e-3;         // |h| bound where a multiplier is positive
  double multiplier_support = 1e-6; // multipliers below this skip the support check
  double duality_gap = 1e-10;
  int duality_probes = 10;
};

/// Residuals and booleans certifying the discrete first-order system for a
/// candidate (control, trajectory, multipliers). Everything is recomputed
/// from the triple.
struct KKTReport {
  double stationarity_residual = 0.0;
  double complementarity_residual = 0.0;
  double multiplier_min = 0.0;
  double max_feasibility_violation = 0.0;
  double adjoint_duality_gap = 0.0;
  bool active_set_support_ok = true;
  std::optional<double> slater_margin;

  bool stationarity_ok = false;
  bool complementarity_ok = false;
  bool multipliers_ok = false;
  bool feasibility_ok = false;
  bool support_ok = false;
  bool duality_ok = false;
  bool pass = false;

  KKTTolerances tolerances;
};

KKTReport check_kkt(const ProblemSpec& spec, const Control& u, const Trajectory& traj,
                    const MultiplierSet& multipliers, const KKTTolerances& tol = {});

/// Linearized Slater check with the rescaling scan: when the margin at u_hat
/// is not positive, convex combinations u_alpha = (1-alpha) u_bar + alpha
/// u_hat are scanned for the best margin.
struct SlaterCheck {
  SlaterReport report;
  double initial_slack = 0.0;
  bool initial_condition_ok = false;  // constraint strictly inactive at t = 0
  bool certified = false;             // margin > 0
  double best_margin = 0.0;
  double best_alpha = 1.0;
  std::vector<std::pair<double, double>> scan;  // (alpha, margin)
};

SlaterCheck check_slater(const ProblemSpec& spec, const Control& u_bar,
                         const Control& u_hat);

}  // namespace gradctrl
