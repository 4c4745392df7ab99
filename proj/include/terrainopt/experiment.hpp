#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "terrainopt/cem.hpp"
#include "terrainopt/planner.hpp"

namespace terrainopt {

// Seeded planning instances on fitted synthetic hills: a straight crossing of
// the patch with rest-to-rest endpoints and the inscribed-square box.
struct InstanceSpec {
  double extent = 10.0;
  double spacing = 0.2;
  std::size_t n_frequencies = 100;
  int n_steps = 50;
  double horizon = 10.0;
  int order = 10;
  BoundaryState start{-3.0, 0.0, 0.6, 0.0, 0.0, 0.0};
  BoundaryState goal{3.0, 0.0, 0.6, 0.0, 0.0, 0.0};
};

struct PlanningInstance {
  std::uint64_t seed = 0;
  TerrainModel terrain;
  BasisMatrices basis;
  ConstraintSet constraints;
};

PlanningInstance make_hills_instance(std::uint64_t seed, const InstanceSpec& spec = {});

// Instances for seeds first_seed, first_seed + 1, ...
std::vector<PlanningInstance> make_instance_set(int count, std::uint64_t first_seed,
                                                const InstanceSpec& spec = {});

struct MethodRun {
  std::uint64_t seed = 0;
  double total = 0.0;
  double worst_angle = 0.0;  // min tip-over angle along the trajectory
  double wall_time_s = 0.0;
  long nls_calls = 0;
};

struct MethodSummary {
  std::string method;
  std::vector<MethodRun> runs;

  double mean_total() const;
  double mean_worst_angle() const;
  double mean_wall_time() const;
  double mean_nls_calls() const;
};

// Gradient planner, CEM-100 and CEM-20 on every instance. CEM seeds are
// cem.seed + instance seed so the table is reproducible.
std::vector<MethodSummary> compare_methods(const std::vector<PlanningInstance>& instances,
                                           const VehicleGeometry& geom,
                                           const PlannerConfig& planner, const CemConfig& cem);

}  // namespace terrainopt
