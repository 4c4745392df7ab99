#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>
#include "terrainopt/kinematics.hpp"
#include "terrainopt/planner.hpp"
#include "terrainopt/stability.hpp"
#include "terrainopt/terrain.hpp"

namespace terrainopt::io {

using json = nlohmann::json;

// --- elevation clouds: CSV with header `x,y,z` ---

// Patch center is the bounding-box midpoint, radius the largest distance
// from it.
ElevationCloud read_cloud_csv(const std::filesystem::path& path);
void write_cloud_csv(const std::filesystem::path& path, const ElevationCloud& cloud);

// --- terrain model: {n, center, frequencies, weights, fit_rmse} ---

json to_json(const TerrainModel& model);
TerrainModel terrain_from_json(const json& j);
TerrainModel load_terrain(const std::filesystem::path& path);
void save_terrain(const std::filesystem::path& path, const TerrainModel& model);

// --- vehicle geometry: {h, w, legs, mass[, com_offset]} ---

json to_json(const VehicleGeometry& geom);
// Unknown keys are rejected; missing keys keep the defaults.
VehicleGeometry geometry_from_json(const json& j);

json to_json(const PoseSolution& pose);
PoseSolution pose_from_json(const json& j);
json to_json(const ImplicitJacobian& jac);
json to_json(const StabilityReport& report);

// --- planner outputs ---

struct TrajectoryRow {
  double t = 0.0, x = 0.0, y = 0.0, z = 0.0, alpha = 0.0, beta = 0.0, gamma = 0.0;
  double c_s = 0.0, theta_min = 0.0;
};

std::vector<TrajectoryRow> trajectory_rows(const PlanResult& result, const BasisMatrices& basis);
// Header `t,x,y,z,alpha,beta,gamma,c_s,theta_min`.
void write_trajectory_csv(const std::filesystem::path& path, const std::vector<TrajectoryRow>& rows);
std::vector<TrajectoryRow> read_trajectory_csv(const std::filesystem::path& path);

// {cost_r, cost_s_total, min_tipover_angle, ...}
json summary_json(const PlanResult& result, const std::string& method);

// Header `iteration,cost`.
void write_cost_trace_csv(const std::filesystem::path& path, const std::vector<double>& trace);
std::vector<double> read_cost_trace_csv(const std::filesystem::path& path);

// Long-format `series,t,value` rows for external plotting.
void write_plot_data_csv(const std::filesystem::path& path, const std::vector<TrajectoryRow>& rows);

json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& j);

}  // namespace terrainopt::io
