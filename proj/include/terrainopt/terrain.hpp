#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "terrainopt/errors.hpp"

namespace terrainopt {

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

// Scattered elevation samples inside a circular patch.
struct ElevationCloud {
  std::vector<Point3> points;
  Point2 patch_center;
  double patch_radius = 0.0;
};

// One basis pair: a*cos(w1*x + w2*y) + b*sin(w3*x + w4*y), (x, y) relative to
// the model center.
struct FrequencyQuad {
  double w1 = 0.0;
  double w2 = 0.0;
  double w3 = 0.0;
  double w4 = 0.0;
};

struct WeightPair {
  double a = 0.0;
  double b = 0.0;
};

// Fourier height field. Immutable after construction; safe to share.
struct TerrainModel {
  Point2 center;
  std::vector<FrequencyQuad> frequencies;
  std::vector<WeightPair> weights;
  double fit_rmse = 0.0;

  std::size_t size() const { return frequencies.size(); }

  // Throws InvalidArgument if the arrays are empty or mismatched.
  void validate() const;
};

struct HeightSample {
  double f = 0.0;
  double fx = 0.0;
  double fy = 0.0;
  double fxx = 0.0;
  double fxy = 0.0;
  double fyy = 0.0;
};

double height(const TerrainModel& model, double x, double y);
std::array<double, 2> height_gradient(const TerrainModel& model, double x, double y);
// Value plus first and second partials in one sweep over the basis.
HeightSample height_derivatives(const TerrainModel& model, double x, double y);

// Generic-scalar evaluation (dual numbers). No input validation.
template <class T>
T height_generic(const TerrainModel& model, const T& x, const T& y) {
  using std::cos;
  using std::sin;
  const T dx = x - model.center.x;
  const T dy = y - model.center.y;
  T sum(0.0);
  for (std::size_t n = 0; n < model.frequencies.size(); ++n) {
    const auto& w = model.frequencies[n];
    const auto& c = model.weights[n];
    sum += c.a * cos(w.w1 * dx + w.w2 * dy) + c.b * sin(w.w3 * dx + w.w4 * dy);
  }
  return sum;
}

struct FitOptions {
  std::size_t n_frequencies = 100;
  std::uint64_t seed = 0;
  double ridge = 1e-8;
  // Upper bound of the frequency dictionary; <= 0 selects 2*pi*4/radius.
  double omega_max = 0.0;
  // Explicit dictionary; overrides n_frequencies and the generated grid.
  std::optional<std::vector<FrequencyQuad>> frequencies;
  // Gradient refinement of the frequencies after the linear solve.
  bool refine_frequencies = false;
  int refine_steps = 50;
};

// Least-squares fit of the Fourier weights; frequencies come from a
// deterministic dictionary (or `options.frequencies`).
TerrainModel fit_terrain(const ElevationCloud& cloud, const FitOptions& options);

// Low-discrepancy dictionary: (w1, w2) from a scrambled Halton sequence with
// |w| <= omega_max, w1 >= 0; the sine term shares the cosine's frequency.
// Entry 0 is the zero frequency (constant offset).
std::vector<FrequencyQuad> frequency_dictionary(std::size_t n, double omega_max,
                                                std::uint64_t seed);

// Root-mean-square residual of `model` on `cloud`.
double rmse(const TerrainModel& model, const ElevationCloud& cloud);

// Closed-form models used by tests and the CLI.
TerrainModel flat_model(double offset = 0.0, Point2 center = {});
// z = offset + gx*(x - cx) + gy*(y - cy) up to O(1e-12) inside |r| < 10 m, via a
// near-zero-frequency sine.
TerrainModel plane_model(double gx, double gy, double offset = 0.0, Point2 center = {});

struct SynthKind {
  enum class Type { Flat, Incline, Sinusoidal, Hills };
  Type type = Type::Flat;
  double slope = 0.0;       // incline
  double amplitude = 0.0;   // sinusoidal
  double wavelength = 1.0;  // sinusoidal
  std::uint64_t seed = 0;   // hills

  static SynthKind flat() { return {}; }
  static SynthKind incline(double s) { return {Type::Incline, s, 0.0, 1.0, 0}; }
  static SynthKind sinusoidal(double amp, double wl) {
    return {Type::Sinusoidal, 0.0, amp, wl, 0};
  }
  static SynthKind hills(std::uint64_t seed) { return {Type::Hills, 0.0, 0.0, 1.0, seed}; }
};

// Grid-sampled cloud over [-extent/2, extent/2]^2 clipped to the inscribed
// circle (patch radius extent/2, center at the origin).
ElevationCloud synth_terrain(const SynthKind& kind, double extent, double spacing);

// The analytic surface behind synth_terrain.
double synth_height(const SynthKind& kind, double x, double y);

}  // namespace terrainopt
