#pragma once

// Shared terrain and instance builders for the test binaries.

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "terrainopt/kinematics.hpp"
#include "terrainopt/terrain.hpp"
#include "terrainopt/trajectory.hpp"

namespace fixtures {

using namespace terrainopt;

// A*sin(k x + phx)*cos(k y + phy) + B*cos(k2 (x + y)), written as exact
// Fourier terms.
inline TerrainModel sinusoidal_model(double amp, double k, double phx = 0.0, double phy = 0.0,
                                     double amp2 = 0.0, double k2 = 0.0) {
  TerrainModel m;
  // sin(a)cos(b) = (sin(a+b) + sin(a-b)) / 2
  const double c_plus = phx + phy, c_minus = phx - phy;
  // Phase shifts: sin(u + c) = sin(u)cos(c) + cos(u)sin(c).
  m.frequencies.push_back({k, k, k, k});
  m.weights.push_back({0.5 * amp * std::sin(c_plus), 0.5 * amp * std::cos(c_plus)});
  m.frequencies.push_back({k, -k, k, -k});
  m.weights.push_back({0.5 * amp * std::sin(c_minus), 0.5 * amp * std::cos(c_minus)});
  if (amp2 != 0.0) {
    m.frequencies.push_back({k2, k2, 0.0, 0.0});
    m.weights.push_back({amp2, 0.0});
  }
  return m;
}

// Seeded random smooth terrain with a handful of terms and bounded slopes.
inline TerrainModel random_sinusoidal(std::uint64_t seed, double max_amp = 0.08) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  TerrainModel m;
  for (int n = 0; n < 4; ++n) {
    const double wl = 1.5 + 3.0 * u(rng);
    const double dir = 2.0 * std::numbers::pi * u(rng);
    const double k = 2.0 * std::numbers::pi / wl;
    const double amp = max_amp * (0.3 + 0.7 * u(rng)) / 2.0;
    m.frequencies.push_back({k * std::cos(dir), k * std::sin(dir), k * std::sin(dir),
                             -k * std::cos(dir)});
    m.weights.push_back({amp * (2.0 * u(rng) - 1.0), amp * (2.0 * u(rng) - 1.0)});
  }
  return m;
}

inline YawState random_state(std::mt19937_64& rng, double extent = 2.0) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return {extent * u(rng), extent * u(rng), std::numbers::pi * u(rng)};
}

inline VehicleGeometry equal_legs(double leg = 0.3) {
  VehicleGeometry g;
  g.legs = {leg, leg, leg, leg};
  return g;
}

inline PoseVector nominal_flat_pose(const VehicleGeometry& g) {
  PoseVector u = PoseVector::Zero();
  u[0] = g.legs[0];
  for (int i = 0; i < 4; ++i) {
    u[3 + 3 * i] = kDelta[i] * g.h;
    u[4 + 3 * i] = kRside[i] * g.w;
  }
  return u;
}

}  // namespace fixtures
