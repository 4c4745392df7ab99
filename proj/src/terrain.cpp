#include "terrainopt/terrain.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace terrainopt {

namespace {

void require_finite(double x, double y) {
  if (!std::isfinite(x) || !std::isfinite(y)) {
    throw Error(ErrorKind::NonFinite, "terrain query at non-finite coordinate");
  }
}

double radical_inverse(std::uint64_t index, std::uint64_t base) {
  double inv = 1.0 / static_cast<double>(base);
  double f = inv;
  double r = 0.0;
  while (index > 0) {
    r += f * static_cast<double>(index % base);
    index /= base;
    f *= inv;
  }
  return r;
}

// Uniform in [0, 1) from the raw engine output; std distributions are not
// reproducible across standard libraries.
double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct Trig {
  double cos_c, sin_c, cos_s, sin_s;
};

// Dictionary terms share one phase between the cosine and the sine, so a
// single sin/cos pair usually covers both.
inline Trig term_trig(const FrequencyQuad& w, double dx, double dy) {
  const double pc = w.w1 * dx + w.w2 * dy;
  Trig t{std::cos(pc), std::sin(pc), 0.0, 0.0};
  if (w.w3 == w.w1 && w.w4 == w.w2) {
    t.cos_s = t.cos_c;
    t.sin_s = t.sin_c;
  } else {
    const double ps = w.w3 * dx + w.w4 * dy;
    t.cos_s = std::cos(ps);
    t.sin_s = std::sin(ps);
  }
  return t;
}

bool collinear(const std::vector<Point3>& pts) {
  if (pts.size() < 3) return true;
  const Point3& p0 = pts.front();
  double span = 0.0;
  std::size_t far = 0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double d = std::hypot(pts[i].x - p0.x, pts[i].y - p0.y);
    if (d > span) {
      span = d;
      far = i;
    }
  }
  if (span == 0.0) return true;
  const double ux = (pts[far].x - p0.x) / span;
  const double uy = (pts[far].y - p0.y) / span;
  for (const auto& p : pts) {
    const double cross = ux * (p.y - p0.y) - uy * (p.x - p0.x);
    if (std::abs(cross) > 1e-9 * span) return false;
  }
  return true;
}

Eigen::MatrixXd design_matrix(const ElevationCloud& cloud, Point2 center,
                              const std::vector<FrequencyQuad>& freqs) {
  const auto m = static_cast<Eigen::Index>(cloud.points.size());
  const auto n = static_cast<Eigen::Index>(freqs.size());
  Eigen::MatrixXd a(m, 2 * n);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double dx = cloud.points[j].x - center.x;
    const double dy = cloud.points[j].y - center.y;
    for (Eigen::Index k = 0; k < n; ++k) {
      const auto& w = freqs[k];
      a(j, 2 * k) = std::cos(w.w1 * dx + w.w2 * dy);
      a(j, 2 * k + 1) = std::sin(w.w3 * dx + w.w4 * dy);
    }
  }
  return a;
}

// Ridge least squares via QR of the augmented system [A; sqrt(l) I].
Eigen::VectorXd solve_weights(const Eigen::MatrixXd& a, const Eigen::VectorXd& z,
                              double ridge) {
  const Eigen::Index m = a.rows();
  const Eigen::Index k = a.cols();
  Eigen::MatrixXd aug(m + k, k);
  aug.topRows(m) = a;
  aug.bottomRows(k) = std::sqrt(ridge) * Eigen::MatrixXd::Identity(k, k);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + k);
  rhs.head(m) = z;
  return aug.colPivHouseholderQr().solve(rhs);
}

double sum_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& w,
                   const Eigen::VectorXd& z) {
  return (a * w - z).squaredNorm();
}

}  // namespace

void TerrainModel::validate() const {
  if (frequencies.empty()) {
    throw Error(ErrorKind::InvalidArgument, "terrain model has no basis terms");
  }
  if (frequencies.size() != weights.size()) {
    throw Error(ErrorKind::InvalidArgument, "frequency/weight count mismatch");
  }
}

HeightSample height_derivatives(const TerrainModel& model, double x, double y) {
  require_finite(x, y);
  const double dx = x - model.center.x;
  const double dy = y - model.center.y;
  HeightSample s;
  for (std::size_t n = 0; n < model.frequencies.size(); ++n) {
    const auto& w = model.frequencies[n];
    const auto& c = model.weights[n];
    const Trig t = term_trig(w, dx, dy);
    const double ac = c.a * t.cos_c;
    const double as = c.a * t.sin_c;
    const double bs = c.b * t.sin_s;
    const double bc = c.b * t.cos_s;
    s.f += ac + bs;
    s.fx += -as * w.w1 + bc * w.w3;
    s.fy += -as * w.w2 + bc * w.w4;
    s.fxx += -ac * w.w1 * w.w1 - bs * w.w3 * w.w3;
    s.fxy += -ac * w.w1 * w.w2 - bs * w.w3 * w.w4;
    s.fyy += -ac * w.w2 * w.w2 - bs * w.w4 * w.w4;
  }
  return s;
}

double height(const TerrainModel& model, double x, double y) {
  require_finite(x, y);
  const double dx = x - model.center.x;
  const double dy = y - model.center.y;
  double sum = 0.0;
  for (std::size_t n = 0; n < model.frequencies.size(); ++n) {
    const Trig t = term_trig(model.frequencies[n], dx, dy);
    sum += model.weights[n].a * t.cos_c + model.weights[n].b * t.sin_s;
  }
  return sum;
}

std::array<double, 2> height_gradient(const TerrainModel& model, double x, double y) {
  require_finite(x, y);
  const double dx = x - model.center.x;
  const double dy = y - model.center.y;
  double gx = 0.0;
  double gy = 0.0;
  for (std::size_t n = 0; n < model.frequencies.size(); ++n) {
    const auto& w = model.frequencies[n];
    const auto& c = model.weights[n];
    const Trig t = term_trig(w, dx, dy);
    const double as = c.a * t.sin_c;
    const double bc = c.b * t.cos_s;
    gx += -as * w.w1 + bc * w.w3;
    gy += -as * w.w2 + bc * w.w4;
  }
  return {gx, gy};
}

std::vector<FrequencyQuad> frequency_dictionary(std::size_t n, double omega_max,
                                                std::uint64_t seed) {
  std::vector<FrequencyQuad> out;
  out.reserve(n);
  if (n == 0) return out;
  out.push_back({});
  std::mt19937_64 rng(seed);
  const double shift_u = unit_uniform(rng);
  const double shift_v = unit_uniform(rng);
  for (std::uint64_t i = 1; out.size() < n; ++i) {
    const double u = std::fmod(radical_inverse(i, 2) + shift_u, 1.0);
    const double v = std::fmod(radical_inverse(i, 3) + shift_v, 1.0);
    const double w1 = omega_max * u;
    const double w2 = omega_max * (2.0 * v - 1.0);
    if (std::hypot(w1, w2) > omega_max) continue;
    out.push_back({w1, w2, w1, w2});
  }
  return out;
}

double rmse(const TerrainModel& model, const ElevationCloud& cloud) {
  if (cloud.points.empty()) return 0.0;
  double ss = 0.0;
  for (const auto& p : cloud.points) {
    const double r = height_generic(model, p.x, p.y) - p.z;
    ss += r * r;
  }
  return std::sqrt(ss / static_cast<double>(cloud.points.size()));
}

TerrainModel fit_terrain(const ElevationCloud& cloud, const FitOptions& options) {
  if (cloud.points.empty()) {
    throw Error(ErrorKind::DegenerateCloud, "elevation cloud is empty");
  }
  for (const auto& p : cloud.points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
      throw Error(ErrorKind::NonFinite, "elevation cloud contains a non-finite coordinate");
    }
  }
  if (!std::isfinite(cloud.patch_center.x) || !std::isfinite(cloud.patch_center.y)) {
    throw Error(ErrorKind::NonFinite, "patch center is not finite");
  }

  std::vector<FrequencyQuad> freqs;
  if (options.frequencies) {
    freqs = *options.frequencies;
    if (freqs.empty()) {
      throw Error(ErrorKind::InvalidArgument, "explicit frequency dictionary is empty");
    }
  } else {
    if (options.n_frequencies < 1) {
      throw Error(ErrorKind::InvalidArgument, "n_frequencies must be >= 1");
    }
    double omega_max = options.omega_max;
    if (omega_max <= 0.0) {
      const double radius = cloud.patch_radius > 0.0 ? cloud.patch_radius : 1.0;
      omega_max = 2.0 * std::numbers::pi * 4.0 / radius;
    }
    freqs = frequency_dictionary(options.n_frequencies, omega_max, options.seed);
  }

  if (cloud.points.size() < 2 * freqs.size()) {
    throw Error(ErrorKind::DegenerateCloud,
                "need at least 2N points for N frequencies (M = " +
                    std::to_string(cloud.points.size()) + ")");
  }
  if (collinear(cloud.points)) {
    throw Error(ErrorKind::DegenerateCloud, "elevation points are collinear in (x, y)");
  }

  const Point2 center = cloud.patch_center;
  Eigen::VectorXd z(static_cast<Eigen::Index>(cloud.points.size()));
  for (std::size_t j = 0; j < cloud.points.size(); ++j) z[j] = cloud.points[j].z;

  Eigen::MatrixXd a = design_matrix(cloud, center, freqs);
  Eigen::VectorXd w = solve_weights(a, z, options.ridge);

  if (options.refine_frequencies) {
    double loss = sum_squares(a, w, z);
    for (int step = 0; step < options.refine_steps; ++step) {
      // d loss / d frequencies at fixed weights.
      const Eigen::VectorXd r = a * w - z;
      std::vector<FrequencyQuad> grad(freqs.size());
      double gmax = 0.0;
      for (std::size_t j = 0; j < cloud.points.size(); ++j) {
        const double dx = cloud.points[j].x - center.x;
        const double dy = cloud.points[j].y - center.y;
        for (std::size_t k = 0; k < freqs.size(); ++k) {
          const auto& f = freqs[k];
          const double dc = -w[2 * k] * std::sin(f.w1 * dx + f.w2 * dy) * 2.0 * r[j];
          const double ds = w[2 * k + 1] * std::cos(f.w3 * dx + f.w4 * dy) * 2.0 * r[j];
          grad[k].w1 += dc * dx;
          grad[k].w2 += dc * dy;
          grad[k].w3 += ds * dx;
          grad[k].w4 += ds * dy;
        }
      }
      for (const auto& g : grad) {
        gmax = std::max({gmax, std::abs(g.w1), std::abs(g.w2), std::abs(g.w3), std::abs(g.w4)});
      }
      if (gmax == 0.0) break;
      double t = 1e-2 / gmax;
      bool improved = false;
      for (int halving = 0; halving < 10 && !improved; ++halving, t *= 0.5) {
        std::vector<FrequencyQuad> trial = freqs;
        for (std::size_t k = 0; k < trial.size(); ++k) {
          trial[k].w1 -= t * grad[k].w1;
          trial[k].w2 -= t * grad[k].w2;
          trial[k].w3 -= t * grad[k].w3;
          trial[k].w4 -= t * grad[k].w4;
        }
        Eigen::MatrixXd a_trial = design_matrix(cloud, center, trial);
        Eigen::VectorXd w_trial = solve_weights(a_trial, z, options.ridge);
        const double trial_loss = sum_squares(a_trial, w_trial, z);
        if (trial_loss < loss) {
          freqs = std::move(trial);
          a = std::move(a_trial);
          w = std::move(w_trial);
          loss = trial_loss;
          improved = true;
        }
      }
      if (!improved) break;
    }
  }

  TerrainModel model;
  model.center = center;
  model.frequencies = std::move(freqs);
  model.weights.resize(model.frequencies.size());
  for (std::size_t k = 0; k < model.weights.size(); ++k) {
    model.weights[k] = {w[2 * k], w[2 * k + 1]};
  }
  model.fit_rmse = std::sqrt(sum_squares(a, w, z) / static_cast<double>(z.size()));
  return model;
}

TerrainModel flat_model(double offset, Point2 center) {
  TerrainModel m;
  m.center = center;
  m.frequencies = {FrequencyQuad{}};
  m.weights = {WeightPair{offset, 0.0}};
  return m;
}

TerrainModel plane_model(double gx, double gy, double offset, Point2 center) {
  constexpr double kEps = 1e-6;
  TerrainModel m = flat_model(offset, center);
  const double g = std::hypot(gx, gy);
  if (g > 0.0) {
    m.frequencies.push_back({0.0, 0.0, kEps * gx / g, kEps * gy / g});
    m.weights.push_back({0.0, g / kEps});
  }
  return m;
}

double synth_height(const SynthKind& kind, double x, double y) {
  switch (kind.type) {
    case SynthKind::Type::Flat:
      return 0.0;
    case SynthKind::Type::Incline:
      return kind.slope * x;
    case SynthKind::Type::Sinusoidal: {
      const double k = 2.0 * std::numbers::pi / kind.wavelength;
      return kind.amplitude * std::sin(k * x) * std::cos(k * y);
    }
    case SynthKind::Type::Hills: {
      std::mt19937_64 rng(kind.seed);
      double z = 0.0;
      for (int i = 0; i < 6; ++i) {
        const double cx = -6.0 + 12.0 * unit_uniform(rng);
        const double cy = -6.0 + 12.0 * unit_uniform(rng);
        const double amp = -1.0 + 2.0 * unit_uniform(rng);
        const double sigma = 1.5 + 2.0 * unit_uniform(rng);
        const double r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        z += amp * std::exp(-r2 / (2.0 * sigma * sigma));
      }
      return z;
    }
  }
  return 0.0;
}

ElevationCloud synth_terrain(const SynthKind& kind, double extent, double spacing) {
  if (!(extent > 0.0) || !(spacing > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "extent and spacing must be positive");
  }
  if (kind.type == SynthKind::Type::Sinusoidal && !(kind.wavelength > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "wavelength must be positive");
  }
  ElevationCloud cloud;
  cloud.patch_radius = extent / 2.0;
  const double r = cloud.patch_radius;
  const auto steps = static_cast<long>(std::floor(extent / spacing + 1e-9));
  for (long i = 0; i <= steps; ++i) {
    const double x = -r + static_cast<double>(i) * spacing;
    for (long j = 0; j <= steps; ++j) {
      const double y = -r + static_cast<double>(j) * spacing;
      if (x * x + y * y > r * r * (1.0 + 1e-12)) continue;
      cloud.points.push_back({x, y, synth_height(kind, x, y)});
    }
  }
  return cloud;
}

}  // namespace terrainopt
