#include "terrainopt/pose_batch.hpp"

#include <exception>
#include <optional>

namespace terrainopt {

namespace {

PoseSolution solve_with_retry(const YawState& s, const VehicleGeometry& geom,
                              const TerrainModel& terrain,
                              const std::optional<PoseSolution>& warm,
                              const SolverOptions& options) {
  if (!warm) return solve_pose(s, geom, terrain, std::nullopt, options);
  try {
    return solve_pose(s, geom, terrain, warm, options);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::SolverDiverged && e.kind() != ErrorKind::SingularJacobian) throw;
    return solve_pose(s, geom, terrain, std::nullopt, options);
  }
}

std::vector<PoseSolution> solve_cold_serial(std::span<const YawState> states,
                                            const VehicleGeometry& geom,
                                            const TerrainModel& terrain,
                                            const SolverOptions& options) {
  std::vector<PoseSolution> out(states.size());
  for (std::size_t k = 0; k < states.size(); ++k) {
    out[k] = solve_pose(states[k], geom, terrain, std::nullopt, options);
  }
  return out;
}

std::vector<PoseSolution> solve_cold_parallel(std::span<const YawState> states,
                                              const VehicleGeometry& geom,
                                              const TerrainModel& terrain,
                                              const SolverOptions& options) {
  std::vector<PoseSolution> out(states.size());
  std::exception_ptr failure;
  const auto n = static_cast<long>(states.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (long k = 0; k < n; ++k) {
    try {
      out[k] = solve_pose(states[k], geom, terrain, std::nullopt, options);
    } catch (...) {
#pragma omp critical(terrainopt_pose_batch_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace

std::vector<PoseSolution> solve_pose_batch(std::span<const YawState> states,
                                           const VehicleGeometry& geom,
                                           const TerrainModel& terrain, bool chained,
                                           Execution exec,
                                           std::span<const PoseSolution> previous,
                                           const SolverOptions& options) {
  if (!previous.empty() && previous.size() != states.size()) {
    throw Error(ErrorKind::InvalidArgument, "previous solutions do not match the state count");
  }
  if (!chained) {
    return exec == Execution::Parallel ? solve_cold_parallel(states, geom, terrain, options)
                                       : solve_cold_serial(states, geom, terrain, options);
  }
  std::vector<PoseSolution> out(states.size());
  for (std::size_t k = 0; k < states.size(); ++k) {
    std::optional<PoseSolution> warm;
    if (!previous.empty()) {
      warm = previous[k];
    } else if (k > 0) {
      warm = out[k - 1];
    }
    out[k] = solve_with_retry(states[k], geom, terrain, warm, options);
  }
  return out;
}

}  // namespace terrainopt
