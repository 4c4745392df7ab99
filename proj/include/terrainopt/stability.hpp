#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>

#include "terrainopt/dual.hpp"
#include "terrainopt/kinematics.hpp"
#include "terrainopt/vec3.hpp"

namespace terrainopt {

inline constexpr double kGravity = 9.81;

struct StabilityConfig {
  double epsilon = 0.05;  // rad
  double w_theta = 0.05;
  std::array<double, 3> force{0.0, 0.0, -50.0 * kGravity};  // N

  // Quasi-static gravity load for a vehicle of the given mass.
  static StabilityConfig gravity(double mass, double epsilon = 0.05, double w_theta = 0.05) {
    return {epsilon, w_theta, {0.0, 0.0, -mass * kGravity}};
  }
  void validate() const;
};

struct StabilityReport {
  std::array<Eigen::Vector3d, 4> axes;
  std::array<Eigen::Vector3d, 4> normals;
  std::array<Eigen::Vector3d, 4> force_components;
  std::array<double, 4> angles{};
  std::array<int, 4> signs{};
  double cost = 0.0;
  double min_angle = 0.0;
};

inline constexpr double kMinSupportArea = 1e-6;    // m^2
inline constexpr double kMinProjectedForce = 1e-12;

namespace detail {

template <class T>
struct StabilityTerms {
  std::array<V3<T>, 4> axes, normals, forces;
  std::array<T, 4> angles;
  std::array<int, 4> signs;
  T cost;
};

// Force-angle terms for the support polygon p_1..p_4 (closed, p_5 = p_1).
// The signed angle is atan2((pi^ x nu^).e^, pi^.nu^), whose magnitude is
// acos(nu^.pi^) and which stays differentiable at the tip-over boundary. The
// traversal orientation is read from the polygon's area vector relative to
// the load so that the stable side is positive.
template <class T>
StabilityTerms<T> stability_terms(const std::array<V3<T>, 4>& p, const V3<T>& com,
                                  const StabilityConfig& cfg) {
  using std::atan2;
  const V3<T> nu{T(cfg.force[0]), T(cfg.force[1]), T(cfg.force[2])};

  V3<T> area{T(0.0), T(0.0), T(0.0)};
  for (int i = 0; i < 4; ++i) area = area + cross(p[i] - p[0], p[(i + 1) % 4] - p[0]);
  if (0.5 * value_of(norm(area)) < kMinSupportArea) {
    throw Error(ErrorKind::DegenerateSupportPolygon, "contact polygon area below 1e-6 m^2");
  }
  const double orientation = value_of(dot(area, nu)) < 0.0 ? 1.0 : -1.0;

  StabilityTerms<T> t;
  for (int i = 0; i < 4; ++i) {
    const V3<T>& next = p[(i + 1) % 4];
    const V3<T> e = next - p[i];
    const V3<T> eh = scale(e, 1.0 / norm(e));
    const V3<T> arm = next - com;
    const V3<T> pi = arm - scale(eh, dot(eh, arm));
    const V3<T> nui = nu - scale(eh, dot(eh, nu));
    const T nu_norm = norm(nui);
    const T pi_norm = norm(pi);
    if (value_of(nu_norm) < kMinProjectedForce) {
      throw Error(ErrorKind::ZeroProjectedForce, "load is parallel to a tip-over axis");
    }
    if (value_of(pi_norm) < kMinProjectedForce) {
      throw Error(ErrorKind::DegenerateSupportPolygon, "center of mass lies on a tip-over axis");
    }
    const V3<T> pih = scale(pi, 1.0 / pi_norm);
    const V3<T> nuh = scale(nui, 1.0 / nu_norm);
    const T theta = orientation * atan2(dot(cross(pih, nuh), eh), dot(pih, nuh));
    t.axes[i] = e;
    t.normals[i] = pi;
    t.forces[i] = nui;
    t.angles[i] = theta;
    t.signs[i] = value_of(theta) >= 0.0 ? 1 : -1;
  }
  T cost(0.0);
  for (int i = 0; i < 4; ++i) {
    const T margin = cfg.epsilon - t.angles[i];
    if (value_of(margin) > 0.0) cost += margin;
    const T diff = t.angles[i] - t.angles[(i + 1) % 4];
    cost += cfg.w_theta * (diff * diff);
  }
  t.cost = cost;
  return t;
}

// p_og + R * com_offset.
template <class T>
V3<T> com_generic(const std::array<T, 3>& state, const std::array<T, kPoseDim>& u,
                  const VehicleGeometry& geom) {
  const auto r = rotation_generic(state[2], u[1], u[2]);
  const auto& o = geom.com_offset;
  return {state[0] + r[0] * o[0] + r[1] * o[1] + r[2] * o[2],
          state[1] + r[3] * o[0] + r[4] * o[1] + r[5] * o[2],
          u[0] + r[6] * o[0] + r[7] * o[1] + r[8] * o[2]};
}

template <class T>
std::array<V3<T>, 4> contacts_generic(const std::array<T, kPoseDim>& u) {
  std::array<V3<T>, 4> c;
  for (int i = 0; i < 4; ++i) c[i] = {u[3 + 3 * i], u[4 + 3 * i], u[5 + 3 * i]};
  return c;
}

}  // namespace detail

Eigen::Vector3d com_position(const YawState& state, const PoseSolution& pose,
                             const VehicleGeometry& geom);

// Force-angle report for the pose's contacts and an explicit COM position.
StabilityReport stability_report(const PoseSolution& pose, const Eigen::Vector3d& com,
                                 const StabilityConfig& config);

struct StabilityInputGradient {
  std::array<Eigen::Vector3d, 4> contacts;  // d c_s / d p_contact_i
  Eigen::Vector3d com;                       // d c_s / d com
};

// Forward-mode derivative of c_s w.r.t. its geometric inputs.
StabilityInputGradient stability_input_gradient(const PoseSolution& pose,
                                                const Eigen::Vector3d& com,
                                                const StabilityConfig& config);

struct StabilityPartials {
  Eigen::Vector3d state;  // explicit d c_s / d(x, y, alpha) through the COM
  PoseVector pose;        // d c_s / d u
};

// Partials of c_s(state, u) with the COM placed by com_position.
StabilityPartials stability_partials(const YawState& state, const PoseSolution& pose,
                                     const VehicleGeometry& geom,
                                     const StabilityConfig& config);

// Total d c_s / d(x, y, alpha) = explicit part + (d c_s / d u) * (d u* / d x).
Eigen::Vector3d stability_cost_gradient(const YawState& state, const PoseSolution& pose,
                                        const ImplicitJacobian& jac,
                                        const VehicleGeometry& geom,
                                        const StabilityConfig& config);

// Same total derivative through one implicit VJP; never forms d u* / d x.
Eigen::Vector3d stability_cost_vjp(const YawState& state, const PoseSolution& pose,
                                   const VehicleGeometry& geom, const TerrainModel& terrain,
                                   const StabilityConfig& config,
                                   HessianMode mode = HessianMode::GaussNewton);

}  // namespace terrainopt
