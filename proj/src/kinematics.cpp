#include "terrainopt/kinematics.hpp"

#include <algorithm>
#include <limits>
#include <numbers>

#include "terrainopt/dual.hpp"

namespace terrainopt {

namespace {

using DD = Dual<Dual<double>>;

// Elementary rotations and their first derivatives.
struct RotationFactors {
  Eigen::Matrix3d rz, ry, rx, drz, dry, drx;
};

RotationFactors rotation_factors(double alpha, double beta, double gamma) {
  const double ca = std::cos(alpha), sa = std::sin(alpha);
  const double cb = std::cos(beta), sb = std::sin(beta);
  const double cg = std::cos(gamma), sg = std::sin(gamma);
  RotationFactors f;
  f.rz << ca, -sa, 0, sa, ca, 0, 0, 0, 1;
  f.ry << cg, 0, sg, 0, 1, 0, -sg, 0, cg;
  f.rx << 1, 0, 0, 0, cb, -sb, 0, sb, cb;
  f.drz << -sa, -ca, 0, ca, -sa, 0, 0, 0, 0;
  f.dry << -sg, 0, cg, 0, 0, 0, -cg, 0, -sg;
  f.drx << 0, 0, 0, 0, -sb, -cb, 0, cb, -sb;
  return f;
}

void require_finite_state(const YawState& s) {
  if (!std::isfinite(s.x) || !std::isfinite(s.y) || !std::isfinite(s.alpha)) {
    throw Error(ErrorKind::NonFinite, "yaw state is not finite");
  }
}

DD seeded(double value, bool outer, bool inner) {
  return DD{Dual<double>{value, inner ? 1.0 : 0.0}, Dual<double>{outer ? 1.0 : 0.0, 0.0}};
}

}  // namespace

void VehicleGeometry::validate() const {
  if (!(h > 0.0) || !(w > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "chassis half dimensions must be positive");
  }
  for (double l : legs) {
    if (!(l > 0.0)) throw Error(ErrorKind::InvalidArgument, "leg lengths must be positive");
  }
  if (!(mass > 0.0)) throw Error(ErrorKind::InvalidArgument, "mass must be positive");
}

PoseVector PoseSolution::to_vector() const {
  PoseVector u;
  u[0] = z;
  u[1] = beta;
  u[2] = gamma;
  for (int i = 0; i < 4; ++i) {
    u[3 + 3 * i] = contacts[i].x;
    u[4 + 3 * i] = contacts[i].y;
    u[5 + 3 * i] = contacts[i].z;
  }
  return u;
}

PoseSolution PoseSolution::from_vector(const PoseVector& u) {
  PoseSolution s;
  s.z = u[0];
  s.beta = u[1];
  s.gamma = u[2];
  for (int i = 0; i < 4; ++i) {
    s.contacts[i] = {u[3 + 3 * i], u[4 + 3 * i], u[5 + 3 * i]};
  }
  return s;
}

Eigen::Matrix3d rotation(double alpha, double beta, double gamma) {
  const auto f = rotation_factors(alpha, beta, gamma);
  return f.rz * f.ry * f.rx;
}

ResidualVector loop_closure_residuals(const YawState& state, const PoseVector& u,
                                      const VehicleGeometry& geom,
                                      const TerrainModel& terrain) {
  require_finite_state(state);
  if (!u.allFinite()) throw Error(ErrorKind::NonFinite, "pose vector is not finite");
  const Eigen::Matrix3d r = rotation(state.alpha, u[1], u[2]);
  const Eigen::Vector3d og(state.x, state.y, u[0]);
  ResidualVector g;
  for (int i = 0; i < 4; ++i) {
    g.segment<3>(3 * i) = og + r * geom.corner(i) - u.segment<3>(3 + 3 * i);
    g[12 + i] = u[5 + 3 * i] - height(terrain, u[3 + 3 * i], u[4 + 3 * i]);
  }
  return g;
}

PoseJacobian residual_pose_jacobian(const YawState& state, const PoseVector& u,
                                    const VehicleGeometry& geom,
                                    const TerrainModel& terrain) {
  const auto f = rotation_factors(state.alpha, u[1], u[2]);
  const Eigen::Matrix3d dr_dbeta = f.rz * f.ry * f.drx;
  const Eigen::Matrix3d dr_dgamma = f.rz * f.dry * f.rx;
  PoseJacobian j = PoseJacobian::Zero();
  for (int i = 0; i < 4; ++i) {
    const Eigen::Vector3d b = geom.corner(i);
    j(3 * i + 2, 0) = 1.0;
    j.block<3, 1>(3 * i, 1) = dr_dbeta * b;
    j.block<3, 1>(3 * i, 2) = dr_dgamma * b;
    j.block<3, 3>(3 * i, 3 + 3 * i) = -Eigen::Matrix3d::Identity();
    const auto grad = height_gradient(terrain, u[3 + 3 * i], u[4 + 3 * i]);
    j(12 + i, 3 + 3 * i) = -grad[0];
    j(12 + i, 4 + 3 * i) = -grad[1];
    j(12 + i, 5 + 3 * i) = 1.0;
  }
  return j;
}

StateJacobian residual_state_jacobian(const YawState& state, const PoseVector& u,
                                      const VehicleGeometry& geom) {
  const auto f = rotation_factors(state.alpha, u[1], u[2]);
  const Eigen::Matrix3d dr_dalpha = f.drz * f.ry * f.rx;
  StateJacobian j = StateJacobian::Zero();
  for (int i = 0; i < 4; ++i) {
    j(3 * i, 0) = 1.0;
    j(3 * i + 1, 1) = 1.0;
    j.block<3, 1>(3 * i, 2) = dr_dalpha * geom.corner(i);
  }
  return j;
}

PoseSolution default_initial_pose(const YawState& state, const VehicleGeometry& geom,
                                  const TerrainModel& terrain) {
  require_finite_state(state);
  const double ca = std::cos(state.alpha), sa = std::sin(state.alpha);
  double mean_f = 0.0;
  double mean_leg = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double bx = kDelta[i] * geom.h, by = kRside[i] * geom.w;
    mean_f += height(terrain, state.x + ca * bx - sa * by, state.y + sa * bx + ca * by);
    mean_leg += geom.legs[i];
  }
  PoseSolution s;
  s.z = mean_f / 4.0 + mean_leg / 4.0;
  const Eigen::Matrix3d r = rotation(state.alpha, 0.0, 0.0);
  const Eigen::Vector3d og(state.x, state.y, s.z);
  for (int i = 0; i < 4; ++i) {
    const Eigen::Vector3d c = og + r * geom.corner(i);
    s.contacts[i] = {c.x(), c.y(), c.z()};
  }
  return s;
}

PoseSolution solve_pose(const YawState& state, const VehicleGeometry& geom,
                        const TerrainModel& terrain,
                        const std::optional<PoseSolution>& warm_start,
                        const SolverOptions& options) {
  require_finite_state(state);
  geom.validate();
  terrain.validate();
  PoseVector u = warm_start ? warm_start->to_vector()
                            : default_initial_pose(state, geom, terrain).to_vector();
  if (!u.allFinite()) throw Error(ErrorKind::NonFinite, "warm start is not finite");

  const bool damped = options.method == NlsMethod::LevenbergMarquardt;
  double lambda = damped ? options.lambda0 : 0.0;
  ResidualVector g = loop_closure_residuals(state, u, geom, terrain);
  double cost = g.squaredNorm();
  double last_step = std::numeric_limits<double>::infinity();

  for (int it = 0; it < options.max_iterations; ++it) {
    const PoseJacobian j = residual_pose_jacobian(state, u, geom, terrain);
    const PoseVector jtg = j.transpose() * g;
    const double grad_norm = 2.0 * jtg.norm();
    if (grad_norm <= options.gradient_tol && last_step <= options.step_tol) {
      PoseSolution s = PoseSolution::from_vector(u);
      s.residual_norm = std::sqrt(cost);
      s.gradient_norm = grad_norm;
      s.iterations = it;
      s.converged = true;
      if (std::abs(s.beta) >= std::numbers::pi / 2 || std::abs(s.gamma) >= std::numbers::pi / 2) {
        throw Error(ErrorKind::SolverDiverged, "pose solution reached a gimbal-adjacent attitude");
      }
      return s;
    }
    const Eigen::Matrix<double, kPoseDim, kPoseDim> jtj = j.transpose() * j;
    bool accepted = false;
    while (!accepted) {
      Eigen::Matrix<double, kPoseDim, kPoseDim> a = jtj;
      a.diagonal().array() += lambda;
      const PoseVector step = a.ldlt().solve(-jtg);
      if (!step.allFinite()) {
        if (!damped) throw Error(ErrorKind::SingularJacobian, "Gauss-Newton system is singular");
        lambda = std::max(lambda * 10.0, 1e-12);
      } else {
        const PoseVector trial = u + step;
        const ResidualVector g_trial = loop_closure_residuals(state, trial, geom, terrain);
        const double cost_trial = g_trial.squaredNorm();
        // Near the optimum the cost change drops below rounding; fall back to
        // the gradient to decide.
        const double noise =
            1e-13 * (cost + std::sqrt(cost) * (1.0 + trial.cwiseAbs().maxCoeff() +
                                               std::abs(state.x) + std::abs(state.y)));
        const bool within_rounding = cost_trial <= cost + noise;
        const bool better = cost_trial < cost ||
                            (within_rounding &&
                             2.0 * (residual_pose_jacobian(state, trial, geom, terrain)
                                        .transpose() *
                                    g_trial)
                                       .norm() < grad_norm);
        if (better || !damped) {
          u = trial;
          g = g_trial;
          cost = cost_trial;
          last_step = step.norm();
          lambda = std::max(lambda / 10.0, 0.0);
          accepted = true;
        } else if (grad_norm <= options.gradient_tol) {
          // No representable descent left at this precision.
          last_step = 0.0;
          accepted = true;
        } else {
          lambda *= 10.0;
        }
      }
      if (lambda > 1e16) {
        throw Error(ErrorKind::SingularJacobian, "Levenberg-Marquardt damping exhausted");
      }
    }
  }
  throw Error(ErrorKind::SolverDiverged,
              "pose solver did not converge in " + std::to_string(options.max_iterations) +
                  " iterations");
}

ObjectiveDerivatives objective_derivatives(const YawState& state, const PoseSolution& solution,
                                           const VehicleGeometry& geom,
                                           const TerrainModel& terrain, HessianMode mode) {
  const PoseVector u = solution.to_vector();
  const PoseJacobian ju = residual_pose_jacobian(state, u, geom, terrain);
  const StateJacobian jx = residual_state_jacobian(state, u, geom);
  ObjectiveDerivatives d;
  d.H = 2.0 * ju.transpose() * ju;
  d.B = 2.0 * ju.transpose() * jx;
  if (mode == HessianMode::GaussNewton) return d;

  const ResidualVector g = loop_closure_residuals(state, u, geom, terrain);

  // Closure rows: curvature lives only in the angles (alpha, beta, gamma).
  const std::array<double, 3> angles{state.alpha, solution.beta, solution.gamma};
  std::array<std::array<double, 3>, 3> curv{};  // sum_j g_j d2 g_j / d angle_p d angle_q
  for (int p = 0; p < 3; ++p) {
    for (int q = p; q < 3; ++q) {
      const auto r = rotation_generic(seeded(angles[0], p == 0, q == 0),
                                      seeded(angles[1], p == 1, q == 1),
                                      seeded(angles[2], p == 2, q == 2));
      double acc = 0.0;
      for (int i = 0; i < 4; ++i) {
        const Eigen::Vector3d b = geom.corner(i);
        for (int row = 0; row < 3; ++row) {
          const double second = r[3 * row].d.d * b.x() + r[3 * row + 1].d.d * b.y() +
                                r[3 * row + 2].d.d * b.z();
          acc += g[3 * i + row] * second;
        }
      }
      curv[p][q] = curv[q][p] = acc;
    }
  }
  // Angle index -> pose column: beta = 1, gamma = 2; alpha is state column 2.
  d.H(1, 1) += 2.0 * curv[1][1];
  d.H(1, 2) += 2.0 * curv[1][2];
  d.H(2, 1) += 2.0 * curv[2][1];
  d.H(2, 2) += 2.0 * curv[2][2];
  d.B(1, 2) += 2.0 * curv[1][0];
  d.B(2, 2) += 2.0 * curv[2][0];

  // Terrain rows: g = z_c - f(x_c, y_c), curvature is -Hess f.
  for (int i = 0; i < 4; ++i) {
    const double xc = u[3 + 3 * i], yc = u[4 + 3 * i];
    const double gi = g[12 + i];
    const std::array<std::array<int, 2>, 3> pairs{{{0, 0}, {0, 1}, {1, 1}}};
    for (const auto& pq : pairs) {
      const DD f = height_generic(terrain, seeded(xc, pq[0] == 0, pq[1] == 0),
                                  seeded(yc, pq[0] == 1, pq[1] == 1));
      const double c = -2.0 * gi * f.d.d;
      const int a = 3 + 3 * i + pq[0];
      const int b = 3 + 3 * i + pq[1];
      d.H(a, b) += c;
      if (a != b) d.H(b, a) += c;
    }
  }
  return d;
}

namespace {

double hessian_condition(const Eigen::Matrix<double, kPoseDim, kPoseDim>& h) {
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, kPoseDim, kPoseDim>> eig(
      h, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

}  // namespace

ImplicitJacobian implicit_jacobian(const YawState& state, const PoseSolution& solution,
                                   const VehicleGeometry& geom, const TerrainModel& terrain,
                                   HessianMode mode) {
  if (!solution.converged) {
    throw Error(ErrorKind::InvalidArgument, "implicit Jacobian needs a converged pose");
  }
  const ObjectiveDerivatives d = objective_derivatives(state, solution, geom, terrain, mode);
  ImplicitJacobian out;
  out.conditioning = hessian_condition(d.H);
  if (!(out.conditioning <= kMaxHessianCondition)) {
    throw Error(ErrorKind::SingularHessian,
                "cond(H) = " + std::to_string(out.conditioning) + " exceeds 1e12");
  }
  out.matrix = -d.H.ldlt().solve(d.B);
  return out;
}

Eigen::Vector3d implicit_vjp(const YawState& state, const PoseSolution& solution,
                             const VehicleGeometry& geom, const TerrainModel& terrain,
                             const PoseVector& cotangent, HessianMode mode) {
  if (!solution.converged) {
    throw Error(ErrorKind::InvalidArgument, "implicit VJP needs a converged pose");
  }
  const ObjectiveDerivatives d = objective_derivatives(state, solution, geom, terrain, mode);
  const auto ldlt = d.H.ldlt();
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw Error(ErrorKind::SingularHessian, "H is not positive definite");
  }
  const PoseVector w = ldlt.solve(cotangent);
  return -(d.B.transpose() * w);
}

}  // namespace terrainopt
