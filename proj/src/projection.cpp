#include "terrainopt/projection.hpp"

#include <algorithm>
#include <limits>

namespace terrainopt {

namespace {

constexpr double kFeasTol = 1e-12;
constexpr double kDependentTol = 1e-12;

}  // namespace

EqualityParametrization equality_parametrization(const Eigen::MatrixXd& A_eq,
                                                 const Eigen::VectorXd& b_eq) {
  const Eigen::Index n = A_eq.cols();
  EqualityParametrization p;
  if (A_eq.rows() == 0) {
    p.particular = Eigen::VectorXd::Zero(n);
    p.nullspace = Eigen::MatrixXd::Identity(n, n);
    return p;
  }
  const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A_eq);
  p.particular = cod.solve(b_eq);
  const double mismatch = (A_eq * p.particular - b_eq).norm();
  if (!(mismatch <= 1e-9 * (1.0 + b_eq.norm()))) {
    throw Error(ErrorKind::ProjectionInfeasible, "equality constraints are inconsistent");
  }
  // Null space from the QR of A_eq^T.
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A_eq.transpose());
  const Eigen::Index rank = qr.rank();
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  p.nullspace = q.rightCols(n - rank);
  return p;
}

ProjectionResult project_qp(const Eigen::VectorXd& target, const ConstraintSet& constraints) {
  const Eigen::Index n = target.size();
  if (constraints.A_eq.cols() != n || constraints.A.cols() != n ||
      constraints.A_eq.rows() != constraints.b_eq.size() ||
      constraints.A.rows() != constraints.b.size()) {
    throw Error(ErrorKind::InvalidArgument, "constraint shapes do not match the variable count");
  }
  const EqualityParametrization eq = equality_parametrization(constraints.A_eq, constraints.b_eq);
  const Eigen::MatrixXd& nul = eq.nullspace;
  const Eigen::Index nz = nul.cols();
  const Eigen::Index m = constraints.A.rows();

  const Eigen::MatrixXd c = constraints.A * nul;
  const Eigen::VectorXd d = constraints.b - constraints.A * eq.particular;
  const double scale = 1.0 + (m > 0 ? d.cwiseAbs().maxCoeff() : 0.0);
  const double tol = kFeasTol * scale;

  // Rows with no reach into the free subspace are fixed by the equalities.
  std::vector<bool> free_row(static_cast<std::size_t>(m), true);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (c.row(i).norm() < kDependentTol) {
      free_row[i] = false;
      if (d[i] < -1e-9 * scale) {
        throw Error(ErrorKind::ProjectionInfeasible,
                    "an inequality contradicts the equality constraints");
      }
    }
  }

  Eigen::VectorXd z = nul.transpose() * (target - eq.particular);
  std::vector<Eigen::Index> active;
  std::vector<double> lambda;  // parallel to `active`
  ProjectionResult result;
  const int max_iter = static_cast<int>(20 * (m + nz) + 100);
  int iter = 0;

  for (;; ++iter) {
    if (iter > max_iter) {
      throw Error(ErrorKind::ProjectionInfeasible, "active-set iteration limit reached");
    }
    Eigen::Index p = -1;
    double worst = tol;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (!free_row[i]) continue;
      const double v = c.row(i).dot(z) - d[i];
      if (v > worst) {
        worst = v;
        p = i;
      }
    }
    if (p < 0) break;

    double lambda_p = 0.0;
    const Eigen::VectorXd cp = c.row(p).transpose();
    for (int inner = 0;; ++inner) {
      if (inner > max_iter) {
        throw Error(ErrorKind::ProjectionInfeasible, "active-set inner iteration limit reached");
      }
      const auto k = static_cast<Eigen::Index>(active.size());
      Eigen::VectorXd r = Eigen::VectorXd::Zero(k);
      Eigen::VectorXd dir = cp;
      if (k > 0) {
        Eigen::MatrixXd na(nz, k);
        for (Eigen::Index j = 0; j < k; ++j) na.col(j) = c.row(active[j]).transpose();
        r = na.colPivHouseholderQr().solve(cp);
        dir = cp - na * r;
      }
      const double dir_sq = dir.squaredNorm();
      double t1 = std::numeric_limits<double>::infinity();
      if (dir_sq > kDependentTol * kDependentTol * std::max(1.0, cp.squaredNorm())) {
        t1 = (cp.dot(z) - d[p]) / dir_sq;
      }
      double t2 = std::numeric_limits<double>::infinity();
      Eigen::Index drop = -1;
      for (Eigen::Index j = 0; j < k; ++j) {
        if (r[j] > kDependentTol) {
          const double t = lambda[j] / r[j];
          if (t < t2) {
            t2 = t;
            drop = j;
          }
        }
      }
      const double t = std::min(t1, t2);
      if (!std::isfinite(t)) {
        throw Error(ErrorKind::ProjectionInfeasible, "inequality constraints are infeasible");
      }
      if (std::isfinite(t1)) z -= t * dir;
      for (Eigen::Index j = 0; j < k; ++j) lambda[j] -= t * r[j];
      lambda_p += t;
      if (t1 <= t2) {
        active.push_back(p);
        lambda.push_back(lambda_p);
        break;
      }
      active.erase(active.begin() + drop);
      lambda.erase(lambda.begin() + drop);
      if (cp.dot(z) - d[p] <= tol) {
        // Partial step already satisfied the constraint.
        if (lambda_p > 0.0) {
          active.push_back(p);
          lambda.push_back(lambda_p);
        }
        break;
      }
    }
  }

  result.xi = eq.particular + nul * z;
  result.ineq_multipliers = Eigen::VectorXd::Zero(m);
  for (std::size_t j = 0; j < active.size(); ++j) {
    result.ineq_multipliers[active[j]] = std::max(lambda[j], 0.0);
  }
  result.active = active;
  std::sort(result.active.begin(), result.active.end());
  result.iterations = iter;

  // Equality multipliers from the full-space stationarity condition.
  const Eigen::VectorXd rest =
      -(result.xi - target + constraints.A.transpose() * result.ineq_multipliers);
  if (constraints.A_eq.rows() > 0) {
    const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(
        constraints.A_eq.transpose());
    result.eq_multipliers = cod.solve(rest);
  } else {
    result.eq_multipliers = Eigen::VectorXd(0);
  }
  return result;
}

TrajectoryParams project(const TrajectoryParams& params, const ConstraintSet& constraints) {
  return TrajectoryParams::from_stacked(project_qp(params.stacked(), constraints).xi);
}

double KktResiduals::max() const {
  return std::max({stationarity, primal_equality, primal_inequality, dual_feasibility,
                   complementarity});
}

KktResiduals kkt_residuals(const Eigen::VectorXd& target, const ConstraintSet& constraints,
                           const ProjectionResult& result) {
  KktResiduals k;
  const Eigen::VectorXd& xi = result.xi;
  Eigen::VectorXd station = xi - target + constraints.A.transpose() * result.ineq_multipliers;
  if (constraints.A_eq.rows() > 0) {
    station += constraints.A_eq.transpose() * result.eq_multipliers;
    k.primal_equality = (constraints.A_eq * xi - constraints.b_eq).cwiseAbs().maxCoeff();
  }
  k.stationarity = station.cwiseAbs().maxCoeff();
  if (constraints.A.rows() > 0) {
    const Eigen::VectorXd slack = constraints.A * xi - constraints.b;
    k.primal_inequality = std::max(0.0, slack.maxCoeff());
    k.dual_feasibility = std::max(0.0, -result.ineq_multipliers.minCoeff());
    k.complementarity = (result.ineq_multipliers.array() * slack.array()).abs().maxCoeff();
  }
  return k;
}

}  // namespace terrainopt
