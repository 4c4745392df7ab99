#pragma once

#include <cstdint>
#include <optional>

#include "terrainopt/planner.hpp"

namespace terrainopt {

struct CemConfig {
  int batch_size = 100;
  double elite_fraction = 0.1;
  int n_iterations = 30;
  double initial_std = 0.5;  // per coefficient
  std::uint64_t seed = 0;
  Execution exec = Execution::Parallel;

  int elite_count() const;
  void validate() const;
};

// Cross-entropy baseline over the same parametrization and costs. Samples are
// projected onto the constraint set and scored with cold-start pose solves.
// Samples whose inner solve fails score +inf. `cost_trace` holds the
// best-ever total after each iteration.
PlanResult plan_cem(const TerrainModel& terrain, const VehicleGeometry& geom,
                    const ConstraintSet& constraints, const BasisMatrices& basis,
                    const CemConfig& cem, const PlannerConfig& costs,
                    const std::optional<TrajectoryParams>& init = std::nullopt);

// Scores a batch of coefficient vectors (total cost, +inf on inner failure).
// Serial and Parallel results are identical.
std::vector<double> score_batch(const std::vector<Eigen::VectorXd>& samples,
                                const TerrainModel& terrain, const VehicleGeometry& geom,
                                const BasisMatrices& basis, const PlannerConfig& costs,
                                Execution exec);

}  // namespace terrainopt
