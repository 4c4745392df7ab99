#include "terrainopt/trajectory.hpp"

#include <cmath>

#include "terrainopt/projection.hpp"

namespace terrainopt {

BasisMatrices build_basis(int n_steps, double horizon, int order) {
  if (order < 5) {
    throw Error(ErrorKind::InsufficientOrder, "polynomial order must be >= 5");
  }
  if (n_steps < 2) throw Error(ErrorKind::InvalidArgument, "need at least 2 steps");
  if (!(horizon > 0.0)) throw Error(ErrorKind::InvalidArgument, "horizon must be positive");
  const int n = order + 1;
  BasisMatrices b;
  b.horizon = horizon;
  b.order = order;
  b.W.resize(n_steps, n);
  b.Wd.resize(n_steps, n);
  b.Wdd.resize(n_steps, n);
  b.times.resize(n_steps);
  for (int k = 0; k < n_steps; ++k) {
    const double s = static_cast<double>(k) / static_cast<double>(n_steps - 1);
    b.times[k] = s * horizon;
    for (int p = 0; p < n; ++p) {
      b.W(k, p) = std::pow(s, p);
      b.Wd(k, p) = p >= 1 ? p * std::pow(s, p - 1) / horizon : 0.0;
      b.Wdd(k, p) = p >= 2 ? p * (p - 1) * std::pow(s, p - 2) / (horizon * horizon) : 0.0;
    }
  }
  return b;
}

Eigen::VectorXd TrajectoryParams::stacked() const {
  Eigen::VectorXd xi(cx.size() + cy.size());
  xi << cx, cy;
  return xi;
}

TrajectoryParams TrajectoryParams::from_stacked(const Eigen::VectorXd& xi) {
  const Eigen::Index n = xi.size() / 2;
  return {xi.head(n), xi.tail(n)};
}

FlatOutputs flat_outputs(const BasisMatrices& basis, const TrajectoryParams& params) {
  if (params.cx.size() != basis.n_coeffs() || params.cy.size() != basis.n_coeffs()) {
    throw Error(ErrorKind::InvalidArgument, "coefficient count does not match the basis");
  }
  FlatOutputs o;
  o.x = basis.W * params.cx;
  o.y = basis.W * params.cy;
  o.xd = basis.Wd * params.cx;
  o.yd = basis.Wd * params.cy;
  o.xdd = basis.Wdd * params.cx;
  o.ydd = basis.Wdd * params.cy;
  const Eigen::Index n = basis.n_steps();
  o.alpha = Eigen::VectorXd::Zero(n);
  o.heading_held.assign(static_cast<std::size_t>(n), false);
  o.heading_source.resize(static_cast<std::size_t>(n));
  Eigen::Index first_valid = -1;
  for (Eigen::Index k = 0; k < n; ++k) {
    o.heading_source[k] = k;
    if (o.xd[k] * o.xd[k] + o.yd[k] * o.yd[k] < kMinHeadingSpeedSq) {
      o.heading_held[k] = true;
      o.zero_velocity_heading = true;
      if (k > 0) {
        o.alpha[k] = o.alpha[k - 1];
        o.heading_source[k] = o.heading_source[k - 1];
      }
    } else {
      o.alpha[k] = std::atan2(o.yd[k], o.xd[k]);
      if (first_valid < 0) first_valid = k;
    }
  }
  // Leading stationary steps take the first defined heading.
  for (Eigen::Index k = 0; first_valid > 0 && k < first_valid; ++k) {
    o.alpha[k] = o.alpha[first_valid];
    o.heading_source[k] = first_valid;
  }
  return o;
}

SmoothnessCost smoothness_cost(const BasisMatrices& basis, const TrajectoryParams& params,
                               const CostConfig& config) {
  const FlatOutputs o = flat_outputs(basis, params);
  const Eigen::Index n = basis.n_coeffs();
  SmoothnessCost c;
  c.gradient = Eigen::VectorXd::Zero(2 * n);
  for (Eigen::Index k = 0; k < basis.n_steps(); ++k) {
    const double xd = o.xd[k], yd = o.yd[k], xdd = o.xdd[k], ydd = o.ydd[k];
    c.accel += xdd * xdd + ydd * ydd;
    const double s = xd * xd + yd * yd + config.epsilon_curv;
    const double s32 = std::pow(s, -1.5);
    const double s52 = std::pow(s, -2.5);
    const double num = ydd * xd - xdd * yd;
    const double kappa = num * s32;
    c.curvature += kappa * kappa;

    const double dk_dxd = ydd * s32 - 3.0 * num * xd * s52;
    const double dk_dyd = -xdd * s32 - 3.0 * num * yd * s52;
    const double dk_dxdd = -yd * s32;
    const double dk_dydd = xd * s32;
    const double wc = 2.0 * config.w_curv * kappa;
    const double wa = 2.0 * config.w_accel;
    c.gradient.head(n) += (wc * dk_dxd) * basis.Wd.row(k).transpose() +
                          (wc * dk_dxdd + wa * xdd) * basis.Wdd.row(k).transpose();
    c.gradient.tail(n) += (wc * dk_dyd) * basis.Wd.row(k).transpose() +
                          (wc * dk_dydd + wa * ydd) * basis.Wdd.row(k).transpose();
  }
  c.value = config.w_accel * c.accel + config.w_curv * c.curvature;
  return c;
}

Box Box::inscribed_square(Point2 center, double radius) {
  const double half = radius / std::sqrt(2.0);
  return {center.x - half, center.x + half, center.y - half, center.y + half};
}

ConstraintSet assemble_constraints(const BoundaryState& b0, const BoundaryState& bn,
                                   const Box& box, const BasisMatrices& basis) {
  if (!(box.x_min < box.x_max) || !(box.y_min < box.y_max)) {
    throw Error(ErrorKind::InvalidArgument, "box bounds are not ordered");
  }
  for (const auto* b : {&b0, &bn}) {
    if ((*b)[0] < box.x_min || (*b)[0] > box.x_max || (*b)[1] < box.y_min ||
        (*b)[1] > box.y_max) {
      throw Error(ErrorKind::InfeasibleBox, "trajectory endpoint lies outside the box");
    }
  }
  const Eigen::Index n = basis.n_coeffs();
  const Eigen::Index last = basis.n_steps() - 1;
  ConstraintSet c;
  c.A_eq = Eigen::MatrixXd::Zero(12, 2 * n);
  c.b_eq.resize(12);
  const Eigen::MatrixXd* mats[3] = {&basis.W, &basis.Wd, &basis.Wdd};
  for (int end = 0; end < 2; ++end) {
    const Eigen::Index k = end == 0 ? 0 : last;
    const BoundaryState& bs = end == 0 ? b0 : bn;
    for (int deriv = 0; deriv < 3; ++deriv) {
      const Eigen::Index rx = 6 * end + 2 * deriv;
      c.A_eq.block(rx, 0, 1, n) = mats[deriv]->row(k);
      c.A_eq.block(rx + 1, n, 1, n) = mats[deriv]->row(k);
      c.b_eq[rx] = bs[2 * deriv];
      c.b_eq[rx + 1] = bs[2 * deriv + 1];
    }
  }
  const Eigen::Index steps = basis.n_steps();
  c.A = Eigen::MatrixXd::Zero(4 * steps, 2 * n);
  c.b.resize(4 * steps);
  for (Eigen::Index k = 0; k < steps; ++k) {
    c.A.block(4 * k, 0, 1, n) = basis.W.row(k);
    c.A.block(4 * k + 1, 0, 1, n) = -basis.W.row(k);
    c.A.block(4 * k + 2, n, 1, n) = basis.W.row(k);
    c.A.block(4 * k + 3, n, 1, n) = -basis.W.row(k);
    c.b[4 * k] = box.x_max;
    c.b[4 * k + 1] = -box.x_min;
    c.b[4 * k + 2] = box.y_max;
    c.b[4 * k + 3] = -box.y_min;
  }
  return c;
}

TrajectoryParams min_acceleration_params(const BasisMatrices& basis,
                                         const ConstraintSet& constraints) {
  const EqualityParametrization eq = equality_parametrization(constraints.A_eq, constraints.b_eq);
  const Eigen::Index n = basis.n_coeffs();
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(2 * basis.n_steps(), 2 * n);
  acc.topLeftCorner(basis.n_steps(), n) = basis.Wdd;
  acc.bottomRightCorner(basis.n_steps(), n) = basis.Wdd;
  Eigen::VectorXd xi = eq.particular;
  if (eq.nullspace.cols() > 0) {
    const Eigen::MatrixXd m = acc * eq.nullspace;
    const Eigen::VectorXd z = m.colPivHouseholderQr().solve(-(acc * eq.particular));
    xi += eq.nullspace * z;
  }
  return TrajectoryParams::from_stacked(xi);
}

}  // namespace terrainopt
