#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "terrainopt/pose_batch.hpp"

namespace {

using namespace terrainopt;

std::vector<YawState> path_states(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-0.05, 0.05);
  std::vector<YawState> out;
  for (int k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / (n - 1);
    out.push_back({-2.0 + 4.0 * t + jitter(rng), std::sin(3.0 * t) + jitter(rng), 0.4 * t});
  }
  return out;
}

TEST(PoseBatch, ColdSerialAndParallelAreBitIdentical) {
  const auto terrain = fixtures::random_sinusoidal(21);
  const auto states = path_states(64, 3);
  const auto serial =
      solve_pose_batch(states, VehicleGeometry{}, terrain, false, Execution::Serial);
  const auto parallel =
      solve_pose_batch(states, VehicleGeometry{}, terrain, false, Execution::Parallel);
  ASSERT_EQ(serial.size(), parallel.size());
  for (std::size_t k = 0; k < serial.size(); ++k) {
    EXPECT_EQ(serial[k].to_vector(), parallel[k].to_vector()) << "step " << k;
    EXPECT_EQ(serial[k].iterations, parallel[k].iterations);
  }
}

TEST(PoseBatch, ColdMatchesIndividualSolves) {
  const auto terrain = fixtures::random_sinusoidal(22);
  const auto states = path_states(10, 4);
  const auto batch = solve_pose_batch(states, VehicleGeometry{}, terrain, false);
  for (std::size_t k = 0; k < states.size(); ++k) {
    EXPECT_EQ(batch[k].to_vector(), solve_pose(states[k], VehicleGeometry{}, terrain).to_vector());
  }
}

TEST(PoseBatch, ChainedAgreesWithCold) {
  const auto terrain = fixtures::random_sinusoidal(23);
  const auto states = path_states(40, 5);
  const auto cold = solve_pose_batch(states, VehicleGeometry{}, terrain, false);
  const auto chained = solve_pose_batch(states, VehicleGeometry{}, terrain, true);
  for (std::size_t k = 0; k < states.size(); ++k) {
    EXPECT_LE((cold[k].to_vector() - chained[k].to_vector()).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(PoseBatch, ChainedIgnoresExecutionFlag) {
  const auto terrain = fixtures::random_sinusoidal(24);
  const auto states = path_states(20, 6);
  const auto a = solve_pose_batch(states, VehicleGeometry{}, terrain, true, Execution::Serial);
  const auto b = solve_pose_batch(states, VehicleGeometry{}, terrain, true, Execution::Parallel);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a[k].to_vector(), b[k].to_vector());
}

TEST(PoseBatch, PreviousSolutionsSeedEachStep) {
  const auto terrain = fixtures::random_sinusoidal(25);
  const auto states = path_states(15, 7);
  const auto first = solve_pose_batch(states, VehicleGeometry{}, terrain, true);
  const auto again = solve_pose_batch(states, VehicleGeometry{}, terrain, true, Execution::Serial,
                                      first);
  for (std::size_t k = 0; k < states.size(); ++k) {
    EXPECT_LE(again[k].iterations, 2) << "step " << k;
    EXPECT_LE((again[k].to_vector() - first[k].to_vector()).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(PoseBatch, ErrorsPropagateFromWorkers) {
  const auto states = path_states(16, 8);
  SolverOptions opts;
  opts.max_iterations = 1;
  EXPECT_THROW(solve_pose_batch(states, VehicleGeometry{}, fixtures::random_sinusoidal(26, 0.2),
                                false, Execution::Parallel, {}, opts),
               Error);
}

}  // namespace
