#pragma once

#include <span>
#include <vector>

#include "terrainopt/kinematics.hpp"

namespace terrainopt {

enum class Execution { Serial, Parallel };

// Pose solves along a sequence of states.
//
// Chained mode warm-starts step k from step k-1 (or from `previous[k]` when
// supplied) and is sequential by contract. Cold mode starts every step from
// default_initial_pose, so steps are independent and the Parallel execution
// distributes them over OpenMP threads. Serial and Parallel cold solves are
// bit-identical.
//
// A step whose warm-started solve fails is retried once from the default
// initialization before the error propagates.
std::vector<PoseSolution> solve_pose_batch(std::span<const YawState> states,
                                           const VehicleGeometry& geom,
                                           const TerrainModel& terrain, bool chained,
                                           Execution exec = Execution::Serial,
                                           std::span<const PoseSolution> previous = {},
                                           const SolverOptions& options = {});

}  // namespace terrainopt
