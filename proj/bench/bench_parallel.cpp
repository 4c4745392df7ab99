// Serial reference vs OpenMP kernels: cold pose batches and CEM batch scoring.
// Each parallel benchmark first checks bit-identity against the serial result.

#include <benchmark/benchmark.h>

#include <random>
#include <stdexcept>

#include "terrainopt/cem.hpp"
#include "terrainopt/experiment.hpp"

namespace {

using namespace terrainopt;

const PlanningInstance& instance() {
  static const PlanningInstance in = make_hills_instance(3);
  return in;
}

std::vector<YawState> states(int count) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0), a(-3.1, 3.1);
  std::vector<YawState> out(static_cast<std::size_t>(count));
  for (auto& s : out) s = {u(rng), u(rng), a(rng)};
  return out;
}

std::vector<Eigen::VectorXd> samples(int count) {
  const auto& in = instance();
  const Eigen::VectorXd mean = initial_params(in.basis, in.constraints).stacked();
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n(0.0, 0.5);
  std::vector<Eigen::VectorXd> out;
  for (int i = 0; i < count; ++i) {
    Eigen::VectorXd v = mean;
    for (auto& c : v) c += n(rng);
    out.push_back(project_qp(v, in.constraints).xi);
  }
  return out;
}

void PoseBatch(benchmark::State& state, Execution exec) {
  const auto& in = instance();
  const auto xs = states(static_cast<int>(state.range(0)));
  const VehicleGeometry geom;
  if (exec == Execution::Parallel) {
    const auto a = solve_pose_batch(xs, geom, in.terrain, false, Execution::Serial);
    const auto b = solve_pose_batch(xs, geom, in.terrain, false, Execution::Parallel);
    for (std::size_t k = 0; k < a.size(); ++k) {
      if (a[k].to_vector() != b[k].to_vector()) throw std::runtime_error("pose mismatch");
    }
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_pose_batch(xs, geom, in.terrain, false, exec));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void ScoreBatch(benchmark::State& state, Execution exec) {
  const auto& in = instance();
  const auto xs = samples(static_cast<int>(state.range(0)));
  const VehicleGeometry geom;
  const PlannerConfig costs;
  if (exec == Execution::Parallel &&
      score_batch(xs, in.terrain, geom, in.basis, costs, Execution::Serial) !=
          score_batch(xs, in.terrain, geom, in.basis, costs, Execution::Parallel)) {
    throw std::runtime_error("score mismatch");
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(score_batch(xs, in.terrain, geom, in.basis, costs, exec));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK_CAPTURE(PoseBatch, serial, Execution::Serial)->Arg(50)->Arg(500)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(PoseBatch, parallel, Execution::Parallel)->Arg(50)->Arg(500)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(ScoreBatch, serial, Execution::Serial)->Arg(20)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(ScoreBatch, parallel, Execution::Parallel)->Arg(20)->Arg(100)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
