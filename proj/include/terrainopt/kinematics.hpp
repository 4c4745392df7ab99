#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <optional>

#include "terrainopt/terrain.hpp"

namespace terrainopt {

// Wheel corner signs. Corner i sits at body (delta_i*h, r_i*w, -l_i):
// 1 = (+x, +y), 2 = (-x, +y), 3 = (-x, -y), 4 = (+x, -y), a counterclockwise
// loop seen from +z.
inline constexpr std::array<double, 4> kDelta{+1.0, -1.0, -1.0, +1.0};
inline constexpr std::array<double, 4> kRside{+1.0, +1.0, -1.0, -1.0};

struct VehicleGeometry {
  double h = 0.28;  // half extent along body x
  double w = 0.33;  // half extent along body y
  std::array<double, 4> legs{0.165, 0.165, 0.165, 0.165};
  double mass = 50.0;
  // Center of mass relative to the chassis center, body frame.
  std::array<double, 3> com_offset{0.0, 0.0, 0.0};

  void validate() const;
  // Chassis-frame vector from the center to contact i.
  Eigen::Vector3d corner(int i) const {
    return {kDelta[i] * h, kRside[i] * w, -legs[i]};
  }
};

struct YawState {
  double x = 0.0;
  double y = 0.0;
  double alpha = 0.0;
};

inline constexpr int kPoseDim = 15;
inline constexpr int kResidualDim = 16;
inline constexpr int kStateDim = 3;

using PoseVector = Eigen::Matrix<double, kPoseDim, 1>;
using ResidualVector = Eigen::Matrix<double, kResidualDim, 1>;
using PoseJacobian = Eigen::Matrix<double, kResidualDim, kPoseDim>;
using StateJacobian = Eigen::Matrix<double, kResidualDim, kStateDim>;

struct PoseSolution {
  double z = 0.0;
  double beta = 0.0;   // roll
  double gamma = 0.0;  // pitch
  std::array<Point3, 4> contacts{};
  double residual_norm = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;

  // Layout [z, beta, gamma, xc1, yc1, zc1, ..., xc4, yc4, zc4].
  PoseVector to_vector() const;
  static PoseSolution from_vector(const PoseVector& u);
};

// R = Rz(alpha) * Ry(gamma) * Rx(beta).
Eigen::Matrix3d rotation(double alpha, double beta, double gamma);

template <class T>
std::array<T, 9> rotation_generic(const T& alpha, const T& beta, const T& gamma) {
  using std::cos;
  using std::sin;
  const T ca = cos(alpha), sa = sin(alpha);
  const T cb = cos(beta), sb = sin(beta);
  const T cg = cos(gamma), sg = sin(gamma);
  // Row-major.
  return {ca * cg, ca * sg * sb - sa * cb, ca * sg * cb + sa * sb,
          sa * cg, sa * sg * sb + ca * cb, sa * sg * cb - ca * sb,
          -sg,     cg * sb,                cg * cb};
}

// Stacked residuals: rows 3i..3i+2 are p_og + R*corner_i - p_contact_i,
// rows 12+i are z_ci - f(x_ci, y_ci).
template <class T>
std::array<T, kResidualDim> residuals_generic(const std::array<T, 3>& state,
                                              const std::array<T, kPoseDim>& u,
                                              const VehicleGeometry& geom,
                                              const TerrainModel& terrain) {
  const auto r = rotation_generic(state[2], u[1], u[2]);
  std::array<T, kResidualDim> g;
  const std::array<T, 3> og{state[0], state[1], u[0]};
  for (int i = 0; i < 4; ++i) {
    const double bx = kDelta[i] * geom.h;
    const double by = kRside[i] * geom.w;
    const double bz = -geom.legs[i];
    for (int row = 0; row < 3; ++row) {
      g[3 * i + row] = og[row] + r[3 * row] * bx + r[3 * row + 1] * by +
                       r[3 * row + 2] * bz - u[3 + 3 * i + row];
    }
    g[12 + i] = u[5 + 3 * i] - height_generic(terrain, u[3 + 3 * i], u[4 + 3 * i]);
  }
  return g;
}

ResidualVector loop_closure_residuals(const YawState& state, const PoseVector& u,
                                      const VehicleGeometry& geom,
                                      const TerrainModel& terrain);

// Analytic Jacobians of the residual stack w.r.t. the pose and the yaw state.
PoseJacobian residual_pose_jacobian(const YawState& state, const PoseVector& u,
                                    const VehicleGeometry& geom,
                                    const TerrainModel& terrain);
StateJacobian residual_state_jacobian(const YawState& state, const PoseVector& u,
                                      const VehicleGeometry& geom);

enum class NlsMethod { LevenbergMarquardt, GaussNewton };

struct SolverOptions {
  NlsMethod method = NlsMethod::LevenbergMarquardt;
  double lambda0 = 1e-3;
  int max_iterations = 100;
  double gradient_tol = 1e-10;  // on |d/du sum g^2|
  double step_tol = 1e-12;
};

// Rigid-body guess with zero roll/pitch resting on the mean terrain height
// under the four nominal contacts.
PoseSolution default_initial_pose(const YawState& state, const VehicleGeometry& geom,
                                  const TerrainModel& terrain);

// Minimizes sum_j g_j^2 over the 15 pose unknowns. Throws SolverDiverged when
// the iteration cap is hit and SingularJacobian when damping is exhausted.
PoseSolution solve_pose(const YawState& state, const VehicleGeometry& geom,
                        const TerrainModel& terrain,
                        const std::optional<PoseSolution>& warm_start = std::nullopt,
                        const SolverOptions& options = {});

enum class HessianMode { GaussNewton, Exact };

struct ImplicitJacobian {
  Eigen::Matrix<double, kPoseDim, kStateDim> matrix;  // d u* / d(x, y, alpha)
  double conditioning = 0.0;                          // cond(H)
};

struct ObjectiveDerivatives {
  Eigen::Matrix<double, kPoseDim, kPoseDim> H;   // d2L/du2
  Eigen::Matrix<double, kPoseDim, kStateDim> B;  // d2L/du dx
};

// Second derivatives of L = sum g^2. Exact mode adds the residual-curvature
// terms, obtained with nested dual numbers.
ObjectiveDerivatives objective_derivatives(const YawState& state, const PoseSolution& solution,
                                           const VehicleGeometry& geom,
                                           const TerrainModel& terrain, HessianMode mode);

inline constexpr double kMaxHessianCondition = 1e12;

// -H^{-1} B. Throws SingularHessian when cond(H) > 1e12.
ImplicitJacobian implicit_jacobian(const YawState& state, const PoseSolution& solution,
                                   const VehicleGeometry& geom, const TerrainModel& terrain,
                                   HessianMode mode = HessianMode::GaussNewton);

// Vector-Jacobian product cotangent^T * (-H^{-1} B) with a single solve.
Eigen::Vector3d implicit_vjp(const YawState& state, const PoseSolution& solution,
                             const VehicleGeometry& geom, const TerrainModel& terrain,
                             const PoseVector& cotangent,
                             HessianMode mode = HessianMode::GaussNewton);

}  // namespace terrainopt
