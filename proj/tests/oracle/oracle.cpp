#include "oracle.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace oracle {

namespace {

using V = std::array<double, 3>;

V cross3(const V& a, const V& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

V normalized(const V& a) {
  const double n = std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
  return {a[0] / n, a[1] / n, a[2] / n};
}

}  // namespace

Plane Plane::from_slopes(double gx, double gy, double z0) {
  // z - gx x - gy y = z0
  const double s = std::sqrt(1.0 + gx * gx + gy * gy);
  return {{-gx / s, -gy / s, 1.0 / s}, z0 / s};
}

PlanePose plane_pose(const Plane& plane, double h, double w, double leg, double x, double y,
                     double alpha) {
  const V n = normalized(plane.normal);
  if (!(n[2] > 0.0)) throw std::invalid_argument("plane normal must point up");
  // Body x: the heading direction lifted onto the plane.
  const double lift = -(n[0] * std::cos(alpha) + n[1] * std::sin(alpha)) / n[2];
  const V bx = normalized({std::cos(alpha), std::sin(alpha), lift});
  const V by = cross3(n, bx);

  PlanePose p;
  p.gamma = std::atan2(-bx[2], std::hypot(bx[0], bx[1]));
  p.beta = std::atan2(by[2], n[2]);
  p.z = (plane.offset + leg - n[0] * x - n[1] * y) / n[2];

  const double sx[4] = {1, -1, -1, 1};
  const double sy[4] = {1, 1, -1, -1};
  for (int i = 0; i < 4; ++i) {
    for (int c = 0; c < 3; ++c) {
      const double center = c == 0 ? x : (c == 1 ? y : p.z);
      p.contacts[i][c] = center + sx[i] * h * bx[c] + sy[i] * w * by[c] - leg * n[c];
    }
  }
  return p;
}

Eigen::MatrixXd finite_diff_jacobian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& fn,
    const Eigen::VectorXd& point, double h) {
  Eigen::MatrixXd jac;
  for (Eigen::Index c = 0; c < point.size(); ++c) {
    Eigen::VectorXd plus = point, minus = point;
    plus[c] += h;
    minus[c] -= h;
    const Eigen::VectorXd col = (fn(plus) - fn(minus)) / (2.0 * h);
    if (jac.size() == 0) jac.resize(col.size(), point.size());
    jac.col(c) = col;
  }
  return jac;
}

Tipover2d tipover_2d(double com_offset, double axis_half_span, double com_height) {
  if (!(axis_half_span > 0.0) || !(com_height > 0.0)) {
    throw std::invalid_argument("spans must be positive");
  }
  Tipover2d t;
  t.angle = std::atan2(axis_half_span - com_offset, com_height);
  t.unstable = com_offset > axis_half_span;
  return t;
}

Eigen::VectorXd equality_projection(const Eigen::VectorXd& target, const Eigen::MatrixXd& A_eq,
                                    const Eigen::VectorXd& b_eq) {
  const Eigen::MatrixXd aat = A_eq * A_eq.transpose();
  return target - A_eq.transpose() * aat.fullPivLu().solve(A_eq * target - b_eq);
}

Eigen::VectorXd equality_constrained_quadratic_min(const Eigen::MatrixXd& G,
                                                   const Eigen::MatrixXd& A_eq,
                                                   const Eigen::VectorXd& b_eq) {
  const Eigen::Index n = G.rows(), m = A_eq.rows();
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + m, n + m);
  kkt.topLeftCorner(n, n) = 2.0 * G;
  kkt.topRightCorner(n, m) = A_eq.transpose();
  kkt.bottomLeftCorner(m, n) = A_eq;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + m);
  rhs.tail(m) = b_eq;
  return kkt.fullPivLu().solve(rhs).head(n);
}

Eigen::VectorXd brute_force_qp(const Eigen::VectorXd& target, const Eigen::MatrixXd& A_eq,
                               const Eigen::VectorXd& b_eq, const Eigen::MatrixXd& A,
                               const Eigen::VectorXd& b) {
  const Eigen::Index n = target.size(), me = A_eq.rows(), mi = A.rows();
  if (mi > 20) throw std::invalid_argument("too many inequalities to enumerate");
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_x;
  for (unsigned long mask = 0; mask < (1ul << mi); ++mask) {
    std::vector<Eigen::Index> act;
    for (Eigen::Index i = 0; i < mi; ++i) {
      if (mask & (1ul << i)) act.push_back(i);
    }
    const auto ma = static_cast<Eigen::Index>(act.size());
    if (me + ma > n) continue;
    const Eigen::Index m = me + ma;
    Eigen::MatrixXd c(m, n);
    Eigen::VectorXd d(m);
    c.topRows(me) = A_eq;
    d.head(me) = b_eq;
    for (Eigen::Index j = 0; j < ma; ++j) {
      c.row(me + j) = A.row(act[j]);
      d[me + j] = b[act[j]];
    }
    // Independent rows only.
    Eigen::FullPivLU<Eigen::MatrixXd> lu(c);
    if (lu.rank() < m) continue;
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + m, n + m);
    kkt.topLeftCorner(n, n).setIdentity();
    kkt.topRightCorner(n, m) = c.transpose();
    kkt.bottomLeftCorner(m, n) = c;
    Eigen::VectorXd rhs(n + m);
    rhs << target, d;
    const Eigen::VectorXd sol = kkt.fullPivLu().solve(rhs);
    const Eigen::VectorXd x = sol.head(n);
    const Eigen::VectorXd mult = sol.tail(ma);
    if (ma > 0 && mult.minCoeff() < -1e-10) continue;
    if (mi > 0 && (A * x - b).maxCoeff() > 1e-10) continue;
    const double obj = 0.5 * (x - target).squaredNorm();
    if (obj < best) {
      best = obj;
      best_x = x;
    }
  }
  if (best_x.size() == 0) throw std::runtime_error("no KKT point found");
  return best_x;
}

}  // namespace oracle
