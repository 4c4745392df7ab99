#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "terrainopt/kinematics.hpp"
#include "terrainopt/pose_batch.hpp"
#include "terrainopt/projection.hpp"
#include "terrainopt/stability.hpp"
#include "terrainopt/trajectory.hpp"

namespace terrainopt {

enum class InnerSolveMode {
  WarmChain,  // sequential, warm-started along the trajectory and across iterations
  Cold,       // independent default-initialized solves
};

struct PlannerConfig {
  // Mid-trajectory positions move by ~1e-2 per unit of free coefficient, so
  // useful steps are large; backtracking halves from here.
  double eta = 1e3;
  int max_iters = 100;
  double momentum = 0.9;  // Nesterov; 0 gives plain projected gradient descent
  double tol = 1e-6;      // on |xi_{t+1} - xi_t|_inf
  int max_halvings = 10;
  bool use_stability = true;
  StabilityConfig stability;
  CostConfig cost;
  HessianMode hessian = HessianMode::Exact;
  InnerSolveMode inner = InnerSolveMode::WarmChain;
  Execution cold_exec = Execution::Parallel;  // used by InnerSolveMode::Cold
  SolverOptions solver;
};

// Everything known about one trajectory candidate.
struct TrajectoryEvaluation {
  TrajectoryParams params;
  FlatOutputs outputs;
  std::vector<YawState> states;
  std::vector<PoseSolution> poses;
  std::vector<StabilityReport> reports;
  double cost_r = 0.0;
  double cost_s = 0.0;  // sum over steps, reported even when unused
  double total = 0.0;   // cost_r (+ cost_s when stability is on)
  double min_tipover_angle = 0.0;
  Eigen::VectorXd cost_r_gradient;
};

struct PlanResult {
  TrajectoryParams params;
  std::vector<YawState> states;
  std::vector<PoseSolution> poses;
  std::vector<StabilityReport> reports;
  std::vector<double> cost_trace;  // total cost after each accepted iterate
  std::vector<Eigen::VectorXd> iterates;
  double cost_r = 0.0;
  double cost_s = 0.0;
  double total = 0.0;
  double min_tipover_angle = 0.0;
  double wall_time_s = 0.0;
  long nls_calls = 0;
  int iterations = 0;
  int momentum_restarts = 0;
  bool converged = false;
  bool zero_velocity_heading = false;
};

// Inner pose solves plus costs for one coefficient vector. `warm` (previous
// solutions at the same steps) is used only in WarmChain mode.
TrajectoryEvaluation evaluate_trajectory(const TrajectoryParams& params,
                                         const TerrainModel& terrain,
                                         const VehicleGeometry& geom, const BasisMatrices& basis,
                                         const PlannerConfig& config,
                                         std::span<const PoseSolution> warm = {});

// d(total cost)/d xi: analytic smoothness gradient plus the stability term
// chained through the implicit pose derivative one step at a time.
Eigen::VectorXd total_gradient(const TrajectoryEvaluation& eval, const TerrainModel& terrain,
                               const VehicleGeometry& geom, const BasisMatrices& basis,
                               const PlannerConfig& config);

// Default initial guess: the minimum-acceleration trajectory projected onto
// the constraint set.
TrajectoryParams initial_params(const BasisMatrices& basis, const ConstraintSet& constraints);

// Projected gradient descent on c_r + c_s with the pose NLS as the inner layer.
PlanResult plan(const TerrainModel& terrain, const VehicleGeometry& geom,
                const ConstraintSet& constraints, const BasisMatrices& basis,
                const PlannerConfig& config,
                const std::optional<TrajectoryParams>& init = std::nullopt);

}  // namespace terrainopt
