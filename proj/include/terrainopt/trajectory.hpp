#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "terrainopt/terrain.hpp"

namespace terrainopt {

// Monomial basis in normalized time t^ = t / horizon on a uniform grid that
// includes both endpoints.
struct BasisMatrices {
  Eigen::MatrixXd W, Wd, Wdd;  // n_steps x n_coeffs
  Eigen::VectorXd times;       // seconds
  double horizon = 0.0;
  int order = 0;

  Eigen::Index n_steps() const { return W.rows(); }
  Eigen::Index n_coeffs() const { return W.cols(); }
};

BasisMatrices build_basis(int n_steps, double horizon, int order);

struct TrajectoryParams {
  Eigen::VectorXd cx, cy;

  Eigen::VectorXd stacked() const;
  static TrajectoryParams from_stacked(const Eigen::VectorXd& xi);
};

struct FlatOutputs {
  Eigen::VectorXd x, y, xd, yd, xdd, ydd, alpha;
  // Steps where x'^2 + y'^2 < 1e-10; alpha is carried from a neighbour there.
  std::vector<bool> heading_held;
  // Step whose velocity defines alpha_k (k itself unless held).
  std::vector<Eigen::Index> heading_source;
  bool zero_velocity_heading = false;
};

inline constexpr double kMinHeadingSpeedSq = 1e-10;

FlatOutputs flat_outputs(const BasisMatrices& basis, const TrajectoryParams& params);

struct CostConfig {
  double epsilon_curv = 1e-6;
  double w_accel = 1.0;
  double w_curv = 1.0;
};

struct SmoothnessCost {
  double value = 0.0;
  double accel = 0.0;      // sum_k x''^2 + y''^2
  double curvature = 0.0;  // sum_k kappa_k^2
  Eigen::VectorXd gradient;  // w.r.t. stacked (cx, cy)
};

// sum_k w_a (x''^2 + y''^2) + w_c kappa_k^2 with
// kappa = (y'' x' - x'' y') / (x'^2 + y'^2 + eps)^(3/2).
SmoothnessCost smoothness_cost(const BasisMatrices& basis, const TrajectoryParams& params,
                               const CostConfig& config = {});

// (x, y, x', y', x'', y'')
using BoundaryState = std::array<double, 6>;

struct Box {
  double x_min = 0.0, x_max = 0.0, y_min = 0.0, y_max = 0.0;

  // Axis-aligned square inscribed in the circle.
  static Box inscribed_square(Point2 center, double radius);
};

struct ConstraintSet {
  Eigen::MatrixXd A_eq;  // 12 x 2n: endpoint (x, y, x', y', x'', y'') rows
  Eigen::VectorXd b_eq;
  Eigen::MatrixXd A;     // 4 n_steps x 2n: x <= x_max, -x <= -x_min, y <= y_max, -y <= -y_min
  Eigen::VectorXd b;
};

ConstraintSet assemble_constraints(const BoundaryState& b0, const BoundaryState& bn,
                                   const Box& box, const BasisMatrices& basis);

// Equality-constrained minimizer of sum_k x''^2 + y''^2; a straight line for
// collinear boundary data.
TrajectoryParams min_acceleration_params(const BasisMatrices& basis,
                                         const ConstraintSet& constraints);

}  // namespace terrainopt
