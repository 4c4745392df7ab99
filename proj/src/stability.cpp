#include "terrainopt/stability.hpp"

namespace terrainopt {

namespace {

using D = Dual<double>;

Eigen::Vector3d to_eigen(const V3<double>& v) { return {v.x, v.y, v.z}; }

std::array<V3<double>, 4> contact_vectors(const PoseSolution& pose) {
  std::array<V3<double>, 4> c;
  for (int i = 0; i < 4; ++i) c[i] = {pose.contacts[i].x, pose.contacts[i].y, pose.contacts[i].z};
  return c;
}

}  // namespace

void StabilityConfig::validate() const {
  if (!(epsilon > 0.0)) throw Error(ErrorKind::InvalidArgument, "epsilon must be positive");
  if (!(w_theta >= 0.0)) throw Error(ErrorKind::InvalidArgument, "w_theta must be >= 0");
  const double f = std::sqrt(force[0] * force[0] + force[1] * force[1] + force[2] * force[2]);
  if (!(f > 0.0)) throw Error(ErrorKind::InvalidArgument, "force must be nonzero");
}

Eigen::Vector3d com_position(const YawState& state, const PoseSolution& pose,
                             const VehicleGeometry& geom) {
  const Eigen::Vector3d offset(geom.com_offset[0], geom.com_offset[1], geom.com_offset[2]);
  return Eigen::Vector3d(state.x, state.y, pose.z) +
         rotation(state.alpha, pose.beta, pose.gamma) * offset;
}

StabilityReport stability_report(const PoseSolution& pose, const Eigen::Vector3d& com,
                                 const StabilityConfig& config) {
  config.validate();
  if (!pose.converged) {
    throw Error(ErrorKind::InvalidArgument, "stability report needs a converged pose");
  }
  const auto t = detail::stability_terms(contact_vectors(pose), V3<double>{com.x(), com.y(), com.z()},
                                         config);
  StabilityReport r;
  r.min_angle = t.angles[0];
  for (int i = 0; i < 4; ++i) {
    r.axes[i] = to_eigen(t.axes[i]);
    r.normals[i] = to_eigen(t.normals[i]);
    r.force_components[i] = to_eigen(t.forces[i]);
    r.angles[i] = t.angles[i];
    r.signs[i] = t.signs[i];
    r.min_angle = std::min(r.min_angle, t.angles[i]);
  }
  r.cost = t.cost;
  return r;
}

StabilityInputGradient stability_input_gradient(const PoseSolution& pose,
                                                const Eigen::Vector3d& com,
                                                const StabilityConfig& config) {
  config.validate();
  std::array<double, 15> x{};
  for (int i = 0; i < 4; ++i) {
    x[3 * i] = pose.contacts[i].x;
    x[3 * i + 1] = pose.contacts[i].y;
    x[3 * i + 2] = pose.contacts[i].z;
  }
  x[12] = com.x();
  x[13] = com.y();
  x[14] = com.z();
  StabilityInputGradient g;
  for (int k = 0; k < 15; ++k) {
    std::array<D, 15> xd;
    for (int m = 0; m < 15; ++m) xd[m] = D{x[m], m == k ? 1.0 : 0.0};
    std::array<V3<D>, 4> p;
    for (int i = 0; i < 4; ++i) p[i] = {xd[3 * i], xd[3 * i + 1], xd[3 * i + 2]};
    const auto t = detail::stability_terms(p, V3<D>{xd[12], xd[13], xd[14]}, config);
    if (k < 12) {
      g.contacts[k / 3][k % 3] = t.cost.d;
    } else {
      g.com[k - 12] = t.cost.d;
    }
  }
  return g;
}

StabilityPartials stability_partials(const YawState& state, const PoseSolution& pose,
                                     const VehicleGeometry& geom,
                                     const StabilityConfig& config) {
  config.validate();
  const std::array<double, 3> xs{state.x, state.y, state.alpha};
  const PoseVector u = pose.to_vector();
  StabilityPartials out;
  for (int k = 0; k < kStateDim + kPoseDim; ++k) {
    std::array<D, 3> sd;
    std::array<D, kPoseDim> ud;
    for (int m = 0; m < 3; ++m) sd[m] = D{xs[m], m == k ? 1.0 : 0.0};
    for (int m = 0; m < kPoseDim; ++m) ud[m] = D{u[m], m + 3 == k ? 1.0 : 0.0};
    const auto t = detail::stability_terms(detail::contacts_generic(ud),
                                           detail::com_generic(sd, ud, geom), config);
    if (k < 3) {
      out.state[k] = t.cost.d;
    } else {
      out.pose[k - 3] = t.cost.d;
    }
  }
  return out;
}

Eigen::Vector3d stability_cost_gradient(const YawState& state, const PoseSolution& pose,
                                        const ImplicitJacobian& jac,
                                        const VehicleGeometry& geom,
                                        const StabilityConfig& config) {
  const StabilityPartials p = stability_partials(state, pose, geom, config);
  return p.state + jac.matrix.transpose() * p.pose;
}

Eigen::Vector3d stability_cost_vjp(const YawState& state, const PoseSolution& pose,
                                   const VehicleGeometry& geom, const TerrainModel& terrain,
                                   const StabilityConfig& config, HessianMode mode) {
  const StabilityPartials p = stability_partials(state, pose, geom, config);
  return p.state + implicit_vjp(state, pose, geom, terrain, p.pose, mode);
}

}  // namespace terrainopt
