#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fixtures.hpp"
#include "oracle.hpp"
#include "terrainopt/stability.hpp"

namespace {

using namespace terrainopt;

// Converged flat-ground pose with contacts at (+-a, +-b, 0).
PoseSolution flat_pose(double a, double b, double leg = 0.3) {
  PoseSolution p;
  p.z = leg;
  for (int i = 0; i < 4; ++i) p.contacts[i] = {kDelta[i] * a, kRside[i] * b, 0.0};
  p.converged = true;
  return p;
}

TEST(StabilityReport, SymmetricSquareStance) {
  const auto pose = flat_pose(0.3, 0.3);
  const double com_h = 0.4;
  StabilityConfig cfg;
  cfg.epsilon = 0.05;
  const auto r = stability_report(pose, {0, 0, com_h}, cfg);
  const double expect = oracle::tipover_2d(0.0, 0.3, com_h).angle;
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(r.angles[i], expect, 1e-12);
    EXPECT_EQ(r.signs[i], 1);
  }
  EXPECT_GT(r.min_angle, 0.0);
  EXPECT_NEAR(r.cost, 0.0, 1e-20);
}

TEST(StabilityReport, ComBeyondFrontAxisTipsOver) {
  const auto pose = flat_pose(0.28, 0.33);
  StabilityConfig cfg;
  const auto r = stability_report(pose, {0.35, 0.0, 0.4}, cfg);
  // Axis 4 runs from contact 4 (+x, -y) to contact 1 (+x, +y): the front edge.
  EXPECT_LT(r.angles[3], 0.0);
  EXPECT_EQ(r.signs[3], -1);
  EXPECT_LT(r.min_angle, 0.0);
  EXPECT_GT(r.cost, 0.0);
}

TEST(StabilityReport, MatchesPlanarLeverAcrossOffsets) {
  const double h = 0.28, w = 0.33, com_h = 0.45;
  const auto pose = flat_pose(h, w);
  StabilityConfig cfg;
  for (double d = -0.2; d <= 0.5; d += 0.01) {
    const auto r = stability_report(pose, {d, 0.0, com_h}, cfg);
    const auto o = oracle::tipover_2d(d, h, com_h);
    EXPECT_NEAR(r.angles[3], o.angle, 1e-12) << d;
    EXPECT_EQ(r.angles[3] < 0.0, o.unstable) << d;
  }
}

TEST(StabilityReport, ZeroCrossingAtAxis) {
  const auto pose = flat_pose(0.28, 0.33);
  const auto r = stability_report(pose, {0.28, 0.1, 0.4}, StabilityConfig{});
  EXPECT_LE(std::abs(r.angles[3]), 1e-8);
  EXPECT_DOUBLE_EQ(oracle::tipover_2d(0.28, 0.28, 0.4).angle, 0.0);
}

TEST(StabilityReport, AllMarginsSatisfiedGiveZeroCost) {
  // Square stance whose four angles are all 0.3 rad.
  const double half = 0.3;
  const double com_h = half / std::tan(0.3);
  StabilityConfig cfg;
  cfg.epsilon = 0.1;
  cfg.w_theta = 0.2;
  const auto r = stability_report(flat_pose(half, half), {0, 0, com_h}, cfg);
  for (double a : r.angles) EXPECT_NEAR(a, 0.3, 1e-12);
  EXPECT_NEAR(r.cost, 0.0, 1e-20);
}

TEST(StabilityReport, StructuralInvariants) {
  const auto g = fixtures::equal_legs(0.25);
  std::mt19937_64 rng(3);
  for (int k = 0; k < 30; ++k) {
    const auto t = fixtures::random_sinusoidal(40 + k, 0.15);
    const auto s = fixtures::random_state(rng);
    const auto p = solve_pose(s, g, t);
    StabilityConfig cfg;
    const auto r = stability_report(p, com_position(s, p, g), cfg);
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    double mn = 1e9;
    for (int i = 0; i < 4; ++i) {
      sum += r.axes[i];
      const Eigen::Vector3d eh = r.axes[i].normalized();
      EXPECT_LE(std::abs(r.normals[i].dot(eh)), 1e-10);
      EXPECT_LE(std::abs(r.force_components[i].dot(eh)), 1e-10);
      mn = std::min(mn, r.angles[i]);
    }
    EXPECT_LE(sum.cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(r.min_angle, mn);
  }
}

TEST(StabilityReport, HingeZeroExactlyWhenMarginMet) {
  const auto pose = flat_pose(0.28, 0.33);
  StabilityConfig cfg;
  cfg.w_theta = 0.0;
  cfg.epsilon = 0.5;
  for (double d = -0.3; d <= 0.3; d += 0.02) {
    const auto r = stability_report(pose, {d, 0.5 * d, 0.4}, cfg);
    EXPECT_EQ(r.cost == 0.0, r.min_angle >= cfg.epsilon) << d;
  }
}

Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  return q.normalized().toRotationMatrix();
}

TEST(StabilityReport, RigidMotionInvariance) {
  const auto g = fixtures::equal_legs(0.25);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int k = 0; k < 30; ++k) {
    const auto t = fixtures::random_sinusoidal(80 + k, 0.2);
    const auto s = fixtures::random_state(rng);
    const auto p = solve_pose(s, g, t);
    const Eigen::Vector3d com = com_position(s, p, g);
    StabilityConfig cfg;
    const auto base = stability_report(p, com, cfg);

    const Eigen::Matrix3d rot = random_rotation(rng);
    const Eigen::Vector3d shift(u(rng), u(rng), u(rng));
    PoseSolution moved = p;
    for (auto& c : moved.contacts) {
      const Eigen::Vector3d v = rot * Eigen::Vector3d(c.x, c.y, c.z) + shift;
      c = {v.x(), v.y(), v.z()};
    }
    const Eigen::Vector3d f = rot * Eigen::Vector3d(cfg.force[0], cfg.force[1], cfg.force[2]);
    StabilityConfig moved_cfg = cfg;
    moved_cfg.force = {f.x(), f.y(), f.z()};
    const auto r = stability_report(moved, rot * com + shift, moved_cfg);
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(r.angles[i], base.angles[i], 1e-10);
  }
}

TEST(StabilityReport, ForceScalingInvariance) {
  const auto g = fixtures::equal_legs(0.25);
  const auto t = fixtures::random_sinusoidal(5, 0.2);
  const YawState s{0.4, 0.1, 0.3};
  const auto p = solve_pose(s, g, t);
  const Eigen::Vector3d com = com_position(s, p, g);
  const auto base = stability_report(p, com, StabilityConfig{});
  for (double scale : {1e-3, 0.5, 7.0, 1e4}) {
    StabilityConfig cfg;
    for (auto& f : cfg.force) f *= scale;
    const auto r = stability_report(p, com, cfg);
    for (int i = 0; i < 4; ++i) {
      EXPECT_NEAR(r.angles[i], base.angles[i], 1e-12);
      EXPECT_EQ(r.signs[i], base.signs[i]);
    }
  }
}

TEST(StabilityReport, ErrorPaths) {
  PoseSolution line;
  line.converged = true;
  for (int i = 0; i < 4; ++i) line.contacts[i] = {0.1 * i, 0.0, 0.0};
  try {
    stability_report(line, {0, 0, 0.4}, StabilityConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateSupportPolygon);
  }

  StabilityConfig sideways;
  sideways.force = {-100.0, 0.0, 0.0};
  try {
    stability_report(flat_pose(0.28, 0.33), {0, 0, 0.4}, sideways);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ZeroProjectedForce);
  }

  StabilityConfig bad;
  bad.epsilon = 0.0;
  EXPECT_THROW(bad.validate(), Error);
  bad = StabilityConfig{};
  bad.w_theta = -1.0;
  EXPECT_THROW(bad.validate(), Error);
  bad = StabilityConfig{};
  bad.force = {0, 0, 0};
  EXPECT_THROW(bad.validate(), Error);
}

TEST(StabilityGradient, FlatGroundIsZero) {
  const auto g = fixtures::equal_legs(0.3);
  const YawState s{1.0, -0.5, 0.4};
  const auto p = solve_pose(s, g, flat_model());
  const auto jac = implicit_jacobian(s, p, g, flat_model());
  const auto grad = stability_cost_gradient(s, p, jac, g, StabilityConfig{});
  EXPECT_LE(grad.cwiseAbs().maxCoeff(), 1e-10);
}

TEST(StabilityGradient, InputGradientMatchesFiniteDifferences) {
  const auto pose = flat_pose(0.28, 0.33);
  StabilityConfig cfg;
  cfg.epsilon = 0.9;
  const Eigen::Vector3d com(0.05, -0.03, 0.4);
  const auto grad = stability_input_gradient(pose, com, cfg);
  const double h = 1e-6;
  for (int c = 0; c < 3; ++c) {
    Eigen::Vector3d p = com, m = com;
    p[c] += h;
    m[c] -= h;
    const double fd =
        (stability_report(pose, p, cfg).cost - stability_report(pose, m, cfg).cost) / (2 * h);
    EXPECT_NEAR(grad.com[c], fd, 1e-7);
  }
  for (int i = 0; i < 4; ++i) {
    for (int c = 0; c < 3; ++c) {
      PoseSolution p = pose, m = pose;
      double* pp = c == 0 ? &p.contacts[i].x : (c == 1 ? &p.contacts[i].y : &p.contacts[i].z);
      double* mm = c == 0 ? &m.contacts[i].x : (c == 1 ? &m.contacts[i].y : &m.contacts[i].z);
      *pp += h;
      *mm -= h;
      const double fd =
          (stability_report(p, com, cfg).cost - stability_report(m, com, cfg).cost) / (2 * h);
      EXPECT_NEAR(grad.contacts[i][c], fd, 1e-7);
    }
  }
}

TEST(StabilityGradient, ComAboveAxisPushesBack) {
  const auto pose = flat_pose(0.28, 0.33);
  StabilityConfig cfg;
  const Eigen::Vector3d com(0.28, 0.0, 0.4);
  const auto grad = stability_input_gradient(pose, com, cfg);
  EXPECT_TRUE(grad.com.allFinite());
  // The COM offset points +x from the chassis center; descent must pull back.
  EXPECT_GT(grad.com.dot(Eigen::Vector3d::UnitX()), 0.0);
}

double cs_of_state(const Eigen::VectorXd& v, const VehicleGeometry& g, const TerrainModel& t,
                   const PoseSolution& warm, const StabilityConfig& cfg) {
  const YawState s{v[0], v[1], v[2]};
  const auto p = solve_pose(s, g, t, warm);
  return stability_report(p, com_position(s, p, g), cfg).cost;
}

TEST(StabilityGradient, MatchesFiniteDifferencesThroughSolver) {
  auto g = fixtures::equal_legs(0.25);
  g.com_offset = {0.04, -0.02, 0.15};
  StabilityConfig cfg;
  cfg.epsilon = 0.75;  // keep some hinges active
  cfg.w_theta = 0.2;
  std::mt19937_64 rng(31);
  int checked = 0;
  for (int k = 0; k < 40 && checked < 20; ++k) {
    const auto t = fixtures::random_sinusoidal(900 + k, 0.12);
    const auto s = fixtures::random_state(rng);
    const auto p = solve_pose(s, g, t);
    const auto r = stability_report(p, com_position(s, p, g), cfg);
    bool near_kink = false;
    for (double a : r.angles) near_kink |= std::abs(a - cfg.epsilon) < 1e-3;
    if (near_kink) continue;
    ++checked;
    const auto jac = implicit_jacobian(s, p, g, t, HessianMode::Exact);
    const auto grad = stability_cost_gradient(s, p, jac, g, cfg);
    const auto vjp = stability_cost_vjp(s, p, g, t, cfg, HessianMode::Exact);
    EXPECT_LE((grad - vjp).cwiseAbs().maxCoeff(), 1e-10);
    const auto fd = oracle::finite_diff_jacobian(
        [&](const Eigen::VectorXd& v) {
          Eigen::VectorXd out(1);
          out[0] = cs_of_state(v, g, t, p, cfg);
          return out;
        },
        Eigen::Vector3d(s.x, s.y, s.alpha), 1e-5);
    for (int c = 0; c < 3; ++c) {
      EXPECT_NEAR(grad[c], fd(0, c), std::max(1e-4, 1e-3 * std::abs(fd(0, c))))
          << "sample " << k << " coord " << c;
    }
  }
  EXPECT_EQ(checked, 20);
}

TEST(StabilityGradient, PartialsMatchFiniteDifferences) {
  auto g = fixtures::equal_legs(0.25);
  g.com_offset = {0.02, 0.03, 0.2};
  const auto t = fixtures::random_sinusoidal(2, 0.15);
  const YawState s{0.1, 0.2, 0.7};
  const auto p = solve_pose(s, g, t);
  StabilityConfig cfg;
  cfg.epsilon = 0.8;
  const auto parts = stability_partials(s, p, g, cfg);
  const double h = 1e-6;
  const PoseVector u = p.to_vector();
  for (int j = 0; j < kPoseDim; ++j) {
    PoseVector up = u, um = u;
    up[j] += h;
    um[j] -= h;
    auto pp = PoseSolution::from_vector(up), pm = PoseSolution::from_vector(um);
    pp.converged = pm.converged = true;
    const double fd = (stability_report(pp, com_position(s, pp, g), cfg).cost -
                       stability_report(pm, com_position(s, pm, g), cfg).cost) /
                      (2 * h);
    EXPECT_NEAR(parts.pose[j], fd, 1e-7) << j;
  }
  for (int c = 0; c < 3; ++c) {
    YawState sp = s, sm = s;
    (c == 0 ? sp.x : c == 1 ? sp.y : sp.alpha) += h;
    (c == 0 ? sm.x : c == 1 ? sm.y : sm.alpha) -= h;
    const double fd = (stability_report(p, com_position(sp, p, g), cfg).cost -
                       stability_report(p, com_position(sm, p, g), cfg).cost) /
                      (2 * h);
    EXPECT_NEAR(parts.state[c], fd, 1e-7) << c;
  }
}

}  // namespace
