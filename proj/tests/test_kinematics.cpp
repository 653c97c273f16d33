#include <gtest/gtest.h>

#include <limits>
#include <random>

#include "support.hpp"
#include "tspine/error.hpp"

using namespace tspine;
using std::numbers::pi;

TEST(ArcFormula, TabulatedExamples) {
  EXPECT_EQ(lengths_to_angles({10.0, 0.0, -10.0}, 5.0).theta, (Triple{2.0, 0.0, -2.0}));
  EXPECT_EQ(lengths_to_angles({0.0, 0.0, 0.0}, 5.0).theta, (Triple{0.0, 0.0, 0.0}));
  const Triple t = lengths_to_angles({31.4159, 31.4159, 31.4159}, 10.0).theta;
  for (double v : t) EXPECT_DOUBLE_EQ(v, 3.14159);
}

TEST(ArcFormula, InverseAndLinearity) {
  const Triple dl{7.5, -3.25, 0.125};
  EXPECT_EQ(angles_to_lengths(lengths_to_angles(dl, 4.0)), dl);
  const Triple a = lengths_to_angles(dl, 3.0).theta;
  const Triple b = lengths_to_angles({2.0 * dl[0], 2.0 * dl[1], 2.0 * dl[2]}, 3.0).theta;
  for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(b[i], 2.0 * a[i]);
  EXPECT_THROW(lengths_to_angles(dl, 0.0), ParameterError);
  EXPECT_THROW(lengths_to_angles(dl, -1.0), ParameterError);
}

TEST(Strain, TabulatedExamples) {
  EXPECT_EQ(tendon_strain({5.0, 0.0, -20.0}, {100.0, 100.0, 200.0}), (Triple{0.05, 0.0, -0.1}));
  EXPECT_THROW(tendon_strain({1.0, 0.0, 0.0}, {0.0, 1.0, 1.0}), ParameterError);
}

TEST(ConstantCurvature, StraightPose) {
  const CCGeometry g;
  EXPECT_EQ(ik_constant_curvature(0.0, 0.0, g).delta_l, (Triple{0.0, 0.0, 0.0}));
  const auto fk = fk_constant_curvature({0.0, 0.0, 0.0}, g);
  EXPECT_EQ(fk.pose.beta, 0.0);
  EXPECT_NEAR((fk.pose.tip - Vec3(0, 0, g.s)).norm(), 0.0, 1e-12);
}

TEST(ConstantCurvature, WorkedExample) {
  CCGeometry g;
  g.d = 40.0;
  const Triple dl = ik_constant_curvature(g.azimuth[0], 0.5, g).delta_l;
  EXPECT_NEAR(dl[0], -20.0, 1e-12);
  EXPECT_NEAR(dl[1], 10.0, 1e-12);
  EXPECT_NEAR(dl[2], 10.0, 1e-12);
  EXPECT_NEAR(dl[0] + dl[1] + dl[2], 0.0, 1e-12);
  const auto fk = fk_constant_curvature({-20.0, 10.0, 10.0}, g);
  EXPECT_NEAR(fk.pose.beta, 0.5, 1e-12);
  EXPECT_NEAR(test::azimuth_gap(fk.pose.alpha, g.azimuth[0]), 0.0, 1e-12);
  EXPECT_FALSE(fk.projected);
}

TEST(ConstantCurvature, RoundTripSumZeroAndEquivariance) {
  const CCGeometry g;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ua(0.0, 2.0 * pi), ub(1e-3, g.beta_max);
  for (int k = 0; k < 1000; ++k) {
    const double a = ua(rng), b = ub(rng);
    const Triple dl = ik_constant_curvature(a, b, g).delta_l;
    const auto fk = fk_constant_curvature(dl, g);
    EXPECT_LT(test::azimuth_gap(fk.pose.alpha, a), 1e-9);
    EXPECT_NEAR(fk.pose.beta, b, 1e-9);
    EXPECT_LT(std::abs(dl[0] + dl[1] + dl[2]), 1e-12);
    const Triple rot = ik_constant_curvature(a + 2.0 * pi / 3.0, b, g).delta_l;
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(rot[(i + 1) % 3], dl[i], 1e-12);
  }
}

TEST(ConstantCurvature, CommonModeIsProjectedOut) {
  const CCGeometry g;
  const auto fk = fk_constant_curvature({-15.0, 15.0, 15.0}, g);  // = (-20,10,10) + 5
  EXPECT_TRUE(fk.projected);
  EXPECT_NEAR(fk.pose.beta, 20.0 / g.d, 1e-12);
}

TEST(ConstantCurvature, ReachabilityLimit) {
  const CCGeometry g;
  EXPECT_THROW(ik_constant_curvature(0.3, g.beta_max * 1.01, g), ReachabilityError);
  EXPECT_NO_THROW(ik_constant_curvature(0.3, g.beta_max, g));
}

TEST(ConstantCurvature, TipIsAnArc) {
  const CCGeometry g;
  // Chord length of an arc of length s bent by beta: 2 (s / beta) sin(beta / 2).
  for (double b : {0.1, 0.4, 0.7}) {
    const Vec3 tip = cc_tip(1.1, b, g);
    EXPECT_NEAR(tip.norm(), 2.0 * g.s / b * std::sin(b / 2.0), 1e-9);
    EXPECT_NEAR(std::atan2(tip.y(), tip.x()), 1.1, 1e-12);
    EXPECT_NEAR(std::atan2(std::hypot(tip.x(), tip.y()), tip.z()), b / 2.0, 1e-12);
  }
}

TEST(ConstantCurvature, JacobianMatchesFiniteDifferenceOfTheTip) {
  const CCGeometry g;
  const Triple dl = ik_constant_curvature(0.8, 0.3, g).delta_l;
  const Eigen::Matrix3d J = cc_jacobian(dl, g);
  auto tip = [&](Triple x) {
    const auto p = fk_constant_curvature(x, g).pose;
    return cc_tip(p.alpha, p.beta, g);
  };
  const double h = 1e-4;
  for (int j = 0; j < 3; ++j) {
    Triple a = dl, b = dl;
    // Move along a sum-zero direction so no projection is involved.
    a[j] += h;
    a[(j + 1) % 3] -= h;
    b[j] -= h;
    b[(j + 1) % 3] += h;
    const Vec3 fd = (tip(a) - tip(b)) / (2.0 * h);
    const Vec3 lin = J.col(j) - J.col((j + 1) % 3);
    EXPECT_LT((fd - lin).norm(), 1e-6);
  }
}

TEST(ConstantCurvature, PoseForTipInvertsTheTip) {
  const CCGeometry g;
  const Vec3 target = cc_tip(2.2, 0.35, g);
  const PoseConfig p = cc_pose_for_tip(target, g);
  EXPECT_NEAR(p.alpha, 2.2, 1e-6);
  EXPECT_NEAR(p.beta, 0.35, 1e-6);
}
