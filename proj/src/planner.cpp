#include "terrainopt/planner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>

namespace terrainopt {

namespace {

std::vector<PoseSolution> inner_solves(std::span<const YawState> states,
                                       const VehicleGeometry& geom, const TerrainModel& terrain,
                                       const PlannerConfig& config,
                                       std::span<const PoseSolution> warm) {
  try {
    if (config.inner == InnerSolveMode::Cold) {
      return solve_pose_batch(states, geom, terrain, false, config.cold_exec, {},
                              config.solver);
    }
    return solve_pose_batch(states, geom, terrain, true, Execution::Serial, warm, config.solver);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::SolverDiverged || e.kind() == ErrorKind::SingularJacobian) {
      throw Error(ErrorKind::InnerSolverFailure, e.what());
    }
    throw;
  }
}

PlanResult to_result(const TrajectoryEvaluation& e) {
  PlanResult r;
  r.params = e.params;
  r.states = e.states;
  r.poses = e.poses;
  r.reports = e.reports;
  r.cost_r = e.cost_r;
  r.cost_s = e.cost_s;
  r.total = e.total;
  r.min_tipover_angle = e.min_tipover_angle;
  r.zero_velocity_heading = e.outputs.zero_velocity_heading;
  return r;
}

}  // namespace

TrajectoryEvaluation evaluate_trajectory(const TrajectoryParams& params,
                                         const TerrainModel& terrain,
                                         const VehicleGeometry& geom, const BasisMatrices& basis,
                                         const PlannerConfig& config,
                                         std::span<const PoseSolution> warm) {
  TrajectoryEvaluation e;
  e.params = params;
  e.outputs = flat_outputs(basis, params);
  const Eigen::Index n = basis.n_steps();
  e.states.resize(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    e.states[k] = {e.outputs.x[k], e.outputs.y[k], e.outputs.alpha[k]};
  }
  if (!warm.empty() && warm.size() != e.states.size()) warm = {};
  e.poses = inner_solves(e.states, geom, terrain, config, warm);
  e.reports.resize(e.poses.size());
  e.min_tipover_angle = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < e.poses.size(); ++k) {
    e.reports[k] = stability_report(e.poses[k], com_position(e.states[k], e.poses[k], geom),
                                     config.stability);
    e.cost_s += e.reports[k].cost;
    e.min_tipover_angle = std::min(e.min_tipover_angle, e.reports[k].min_angle);
  }
  const SmoothnessCost cr = smoothness_cost(basis, params, config.cost);
  e.cost_r = cr.value;
  e.cost_r_gradient = cr.gradient;
  e.total = e.cost_r + (config.use_stability ? e.cost_s : 0.0);
  return e;
}

Eigen::VectorXd total_gradient(const TrajectoryEvaluation& eval, const TerrainModel& terrain,
                               const VehicleGeometry& geom, const BasisMatrices& basis,
                               const PlannerConfig& config) {
  Eigen::VectorXd grad = eval.cost_r_gradient;
  if (!config.use_stability) return grad;
  const Eigen::Index nc = basis.n_coeffs();
  const auto n = static_cast<long>(eval.states.size());
  std::vector<Eigen::Vector3d> per_step(static_cast<std::size_t>(n));
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 4)
  for (long k = 0; k < n; ++k) {
    try {
      per_step[k] = stability_cost_vjp(eval.states[k], eval.poses[k], geom, terrain,
                                       config.stability, config.hessian);
    } catch (...) {
#pragma omp critical(terrainopt_gradient_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  const FlatOutputs& o = eval.outputs;
  for (long k = 0; k < n; ++k) {
    const Eigen::Vector3d& g = per_step[k];
    grad.head(nc) += g.x() * basis.W.row(k).transpose();
    grad.tail(nc) += g.y() * basis.W.row(k).transpose();
    const Eigen::Index src = o.heading_source[k];
    if (o.heading_held[src]) continue;
    // alpha = atan2(y', x') at the source step.
    const double vx = o.xd[src], vy = o.yd[src];
    const double v2 = vx * vx + vy * vy;
    grad.head(nc) += (g.z() * -vy / v2) * basis.Wd.row(src).transpose();
    grad.tail(nc) += (g.z() * vx / v2) * basis.Wd.row(src).transpose();
  }
  return grad;
}

TrajectoryParams initial_params(const BasisMatrices& basis, const ConstraintSet& constraints) {
  return project(min_acceleration_params(basis, constraints), constraints);
}

PlanResult plan(const TerrainModel& terrain, const VehicleGeometry& geom,
                const ConstraintSet& constraints, const BasisMatrices& basis,
                const PlannerConfig& config, const std::optional<TrajectoryParams>& init) {
  if (!(config.eta > 0.0) || config.max_iters < 1) {
    throw Error(ErrorKind::InvalidArgument, "planner needs eta > 0 and max_iters >= 1");
  }
  if (config.momentum < 0.0 || config.momentum >= 1.0) {
    throw Error(ErrorKind::InvalidArgument, "momentum must lie in [0, 1)");
  }
  terrain.validate();
  geom.validate();
  config.stability.validate();
  const auto t0 = std::chrono::steady_clock::now();

  // Feasibility check: projecting the zero vector throws if the set is empty.
  project_qp(Eigen::VectorXd::Zero(2 * basis.n_coeffs()), constraints);

  const long steps = basis.n_steps();
  long nls_calls = 0;
  TrajectoryParams start = init ? project(*init, constraints) : initial_params(basis, constraints);
  TrajectoryEvaluation current = evaluate_trajectory(start, terrain, geom, basis, config);
  nls_calls += steps;

  PlanResult result;
  result.cost_trace.push_back(current.total);
  result.iterates.push_back(current.params.stacked());
  Eigen::VectorXd xi = current.params.stacked();
  Eigen::VectorXd xi_prev = xi;
  bool converged = false;
  int it = 0;
  // Step sizes are non-increasing between restarts: each line search opens at
  // the last accepted step rather than repeating the halvings that found it.
  double eta_start = config.eta;

  for (; it < config.max_iters; ++it) {
    const bool extrapolate = config.momentum > 0.0 && (xi - xi_prev).any();
    TrajectoryEvaluation lookahead;
    const TrajectoryEvaluation* base = &current;
    Eigen::VectorXd y = xi;
    if (extrapolate) {
      y = xi + config.momentum * (xi - xi_prev);
      lookahead = evaluate_trajectory(TrajectoryParams::from_stacked(y), terrain, geom, basis,
                                      config, current.poses);
      nls_calls += steps;
      base = &lookahead;
    }
    const Eigen::VectorXd grad = total_gradient(*base, terrain, geom, basis, config);

    double eta = eta_start;
    bool accepted = false;
    TrajectoryEvaluation candidate;
    for (int h = 0; h <= config.max_halvings; ++h, eta *= 0.5) {
      const TrajectoryParams trial =
          project(TrajectoryParams::from_stacked(y - eta * grad), constraints);
      candidate = evaluate_trajectory(trial, terrain, geom, basis, config, current.poses);
      nls_calls += steps;
      if (candidate.total <= current.total) {
        accepted = true;
        eta_start = eta;
        break;
      }
    }
    if (!accepted) {
      if (extrapolate) {
        // Restart momentum from the current iterate.
        xi_prev = xi;
        ++result.momentum_restarts;
        eta_start = config.eta;
        continue;
      }
      converged = true;  // no descent left along the projected gradient
      break;
    }
    const Eigen::VectorXd xi_new = candidate.params.stacked();
    const double step = (xi_new - xi).cwiseAbs().maxCoeff();
    xi_prev = xi;
    xi = xi_new;
    current = std::move(candidate);
    result.cost_trace.push_back(current.total);
    result.iterates.push_back(xi);
    if (step <= config.tol) {
      converged = true;
      ++it;
      break;
    }
  }

  PlanResult out = to_result(current);
  out.cost_trace = std::move(result.cost_trace);
  out.iterates = std::move(result.iterates);
  out.momentum_restarts = result.momentum_restarts;
  out.iterations = it;
  out.converged = converged;
  out.nls_calls = nls_calls;
  out.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace terrainopt
