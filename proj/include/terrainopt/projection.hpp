#pragma once

#include <Eigen/Dense>
#include <vector>

#include "terrainopt/trajectory.hpp"

namespace terrainopt {

// xi = particular + nullspace * z spans {A_eq xi = b_eq}; `particular` is the
// minimum-norm solution and `nullspace` has orthonormal columns.
struct EqualityParametrization {
  Eigen::VectorXd particular;
  Eigen::MatrixXd nullspace;
};

// Throws ProjectionInfeasible when A_eq xi = b_eq has no solution.
EqualityParametrization equality_parametrization(const Eigen::MatrixXd& A_eq,
                                                 const Eigen::VectorXd& b_eq);

struct ProjectionResult {
  Eigen::VectorXd xi;
  Eigen::VectorXd eq_multipliers;    // mu, one per equality row
  Eigen::VectorXd ineq_multipliers;  // lambda >= 0, one per inequality row
  std::vector<Eigen::Index> active;
  int iterations = 0;
};

// argmin 1/2 |xi - target|^2 s.t. A_eq xi = b_eq, A xi <= b.
//
// Dual active-set method (Goldfarb-Idnani with identity Hessian) in the
// null space of the equality rows: starts at the equality-only minimizer and
// adds the most violated inequality until the iterate is primal feasible.
ProjectionResult project_qp(const Eigen::VectorXd& target, const ConstraintSet& constraints);

TrajectoryParams project(const TrajectoryParams& params, const ConstraintSet& constraints);

struct KktResiduals {
  double stationarity = 0.0;
  double primal_equality = 0.0;
  double primal_inequality = 0.0;  // max(0, A xi - b)
  double dual_feasibility = 0.0;   // max(0, -lambda)
  double complementarity = 0.0;    // max |lambda_i (A xi - b)_i|

  double max() const;
};

KktResiduals kkt_residuals(const Eigen::VectorXd& target, const ConstraintSet& constraints,
                           const ProjectionResult& result);

}  // namespace terrainopt
