#include "terrainopt/cem.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

namespace terrainopt {

namespace {

// Box-Muller on raw engine output; std::normal_distribution differs across
// standard libraries.
class Gaussian {
 public:
  explicit Gaussian(std::uint64_t seed) : rng_(seed) {}

  double operator()() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    } while (u1 <= 0.0);
    const double u2 = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

double score_one(const Eigen::VectorXd& xi, const TerrainModel& terrain,
                 const VehicleGeometry& geom, const BasisMatrices& basis,
                 const PlannerConfig& costs) {
  try {
    return evaluate_trajectory(TrajectoryParams::from_stacked(xi), terrain, geom, basis, costs)
        .total;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::InnerSolverFailure || e.kind() == ErrorKind::SingularJacobian ||
        e.kind() == ErrorKind::DegenerateSupportPolygon ||
        e.kind() == ErrorKind::ZeroProjectedForce) {
      return std::numeric_limits<double>::infinity();
    }
    throw;
  }
}

}  // namespace

int CemConfig::elite_count() const {
  return std::clamp(static_cast<int>(std::lround(elite_fraction * batch_size)), 1, batch_size);
}

void CemConfig::validate() const {
  if (batch_size < 1) throw Error(ErrorKind::InvalidArgument, "batch size must be >= 1");
  if (!(elite_fraction > 0.0) || elite_fraction > 1.0) {
    throw Error(ErrorKind::InvalidArgument, "elite fraction must lie in (0, 1]");
  }
  if (n_iterations < 1) throw Error(ErrorKind::InvalidArgument, "need at least one iteration");
  if (!(initial_std >= 0.0)) throw Error(ErrorKind::InvalidArgument, "initial std must be >= 0");
}

std::vector<double> score_batch(const std::vector<Eigen::VectorXd>& samples,
                                const TerrainModel& terrain, const VehicleGeometry& geom,
                                const BasisMatrices& basis, const PlannerConfig& costs,
                                Execution exec) {
  // Each sample is scored with cold, serial inner solves so the batch is the
  // unit of parallelism.
  PlannerConfig cold = costs;
  cold.inner = InnerSolveMode::Cold;
  cold.cold_exec = Execution::Serial;
  std::vector<double> scores(samples.size());
  const auto n = static_cast<long>(samples.size());
  if (exec == Execution::Serial) {
    for (long i = 0; i < n; ++i) scores[i] = score_one(samples[i], terrain, geom, basis, cold);
    return scores;
  }
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < n; ++i) {
    try {
      scores[i] = score_one(samples[i], terrain, geom, basis, cold);
    } catch (...) {
#pragma omp critical(terrainopt_cem_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return scores;
}

PlanResult plan_cem(const TerrainModel& terrain, const VehicleGeometry& geom,
                    const ConstraintSet& constraints, const BasisMatrices& basis,
                    const CemConfig& cem, const PlannerConfig& costs,
                    const std::optional<TrajectoryParams>& init) {
  cem.validate();
  terrain.validate();
  geom.validate();
  costs.stability.validate();
  const auto t0 = std::chrono::steady_clock::now();
  project_qp(Eigen::VectorXd::Zero(2 * basis.n_coeffs()), constraints);

  Eigen::VectorXd mean =
      (init ? project(*init, constraints) : initial_params(basis, constraints)).stacked();
  const Eigen::Index dim = mean.size();
  Eigen::VectorXd stddev = Eigen::VectorXd::Constant(dim, cem.initial_std);
  Gaussian gauss(cem.seed);
  const int elites = cem.elite_count();
  const long steps = basis.n_steps();

  Eigen::VectorXd best = mean;
  double best_cost = std::numeric_limits<double>::infinity();
  PlanResult result;
  long nls_calls = 0;

  for (int it = 0; it < cem.n_iterations; ++it) {
    std::vector<Eigen::VectorXd> samples(static_cast<std::size_t>(cem.batch_size));
    for (auto& s : samples) {
      Eigen::VectorXd raw(dim);
      for (Eigen::Index d = 0; d < dim; ++d) raw[d] = mean[d] + stddev[d] * gauss();
      s = project_qp(raw, constraints).xi;
    }
    const std::vector<double> scores =
        score_batch(samples, terrain, geom, basis, costs, cem.exec);
    nls_calls += static_cast<long>(samples.size()) * steps;

    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    if (scores[order[0]] < best_cost) {
      best_cost = scores[order[0]];
      best = samples[order[0]];
    }

    int finite_elites = 0;
    Eigen::VectorXd new_mean = Eigen::VectorXd::Zero(dim);
    for (int e = 0; e < elites; ++e) {
      if (!std::isfinite(scores[order[e]])) break;
      new_mean += samples[order[e]];
      ++finite_elites;
    }
    if (finite_elites > 0) {
      new_mean /= finite_elites;
      Eigen::VectorXd var = Eigen::VectorXd::Zero(dim);
      for (int e = 0; e < finite_elites; ++e) {
        var += (samples[order[e]] - new_mean).cwiseAbs2();
      }
      mean = new_mean;
      stddev = (var / finite_elites).cwiseSqrt();
    }
    result.cost_trace.push_back(best_cost);
    result.iterates.push_back(best);
  }

  if (!std::isfinite(best_cost)) {
    throw Error(ErrorKind::InnerSolverFailure, "no CEM sample produced a feasible pose sequence");
  }
  PlannerConfig final_costs = costs;
  final_costs.inner = InnerSolveMode::Cold;
  final_costs.cold_exec = Execution::Serial;
  const TrajectoryEvaluation e = evaluate_trajectory(TrajectoryParams::from_stacked(best), terrain,
                                                     geom, basis, final_costs);
  nls_calls += steps;
  PlanResult out;
  out.params = e.params;
  out.states = e.states;
  out.poses = e.poses;
  out.reports = e.reports;
  out.cost_r = e.cost_r;
  out.cost_s = e.cost_s;
  out.total = e.total;
  out.min_tipover_angle = e.min_tipover_angle;
  out.zero_velocity_heading = e.outputs.zero_velocity_heading;
  out.cost_trace = std::move(result.cost_trace);
  out.iterates = std::move(result.iterates);
  out.iterations = cem.n_iterations;
  out.converged = true;
  out.nls_calls = nls_calls;
  out.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace terrainopt
