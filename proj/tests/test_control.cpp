#include <gtest/gtest.h>

#include <Eigen/LU>

#include "support.hpp"
#include "tspine/controller.hpp"
#include "tspine/error.hpp"

using namespace tspine;
using tspine::test::desk_robot;

TEST(Sensor, EmptyEnvironmentSeesNothing) {
  const auto r = sense_infrared({}, PoseConfig{}, Vec3::UnitZ());
  EXPECT_FALSE(r.hit);
  EXPECT_TRUE(std::isinf(r.distance));
}

TEST(Sensor, WallAcrossTheRay) {
  Environment env;
  env.walls.push_back({Vec3(0, 0, 150), Vec3(0, 0, -1), 0.0});
  const auto r = sense_infrared(env, PoseConfig{}, Vec3::UnitZ());
  ASSERT_TRUE(r.hit);
  EXPECT_DOUBLE_EQ(r.distance, 150.0);
  // Behind the sensor does not count.
  EXPECT_FALSE(sense_infrared(env, PoseConfig{}, -Vec3::UnitZ()).hit);
}

TEST(Sensor, NearestObstacleWins) {
  Environment env;
  env.boxes.push_back({Vec3(-10, -10, 100), Vec3(10, 10, 120), 0.0});
  env.spheres.push_back({Vec3(0, 0, 85), 5.0, 1.0});
  const auto r = sense_infrared(env, PoseConfig{}, Vec3::UnitZ());
  ASSERT_TRUE(r.hit);
  EXPECT_DOUBLE_EQ(r.distance, 80.0);
  EXPECT_EQ(r.thermal, 1.0);
}

TEST(Sensor, RangeAndDirectionChecks) {
  Environment env;
  env.max_range = 100.0;
  env.walls.push_back({Vec3(0, 0, 150), Vec3(0, 0, 1), 0.0});
  EXPECT_FALSE(sense_infrared(env, PoseConfig{}, Vec3::UnitZ()).hit);
  EXPECT_THROW(sense_infrared(env, PoseConfig{}, Vec3::Zero()), ParameterError);
}

namespace {

ControllerState tracking(const std::vector<Vec3>& waypoints) {
  ControllerState ctl;
  ctl.geometry = desk_robot().geometry;
  ctl.waypoints = waypoints;
  ctl.command = initial_command(ctl);
  return ctl;
}

std::vector<Vec3> reachable(const Robot& robot) {
  std::vector<Vec3> out;
  Plant probe(robot);
  for (const Triple& dl : {Triple{-12, 0, 0}, Triple{-8, -8, 0}, Triple{0, -4, -14}, Triple{-6, 0, -10}}) {
    probe.apply({dl, Stiffness::high()});
    out.push_back(probe.tip());
  }
  return out;
}

}  // namespace

TEST(Controller, ReachedWaypointAdvancesWithoutCorrection) {
  ControllerState ctl = tracking({Vec3(1, 2, 199), Vec3(0, 0, 200)});
  ctl.config.feedforward = false;
  ctl.command = {{-3.0, 0.0, 0.0}, Stiffness::high()};
  PoseConfig at;
  at.tip = Vec3(1, 2, 199);
  const auto [cmd, next] = step_closed_loop(ctl, at, {});
  EXPECT_EQ(cmd.delta_l, ctl.command.delta_l);
  EXPECT_EQ(next.current, 1u);
  EXPECT_TRUE(next.history.back().advanced);
}

TEST(Controller, SubThresholdReadingHoldsAndSoftens) {
  ControllerState ctl = tracking({Vec3(10, 0, 198)});
  ctl.command = {{-5.0, -1.0, 0.0}, Stiffness::high()};
  SensorReading near;
  near.hit = true;
  near.distance = ctl.config.safety_distance - 1.0;
  PoseConfig at;
  at.tip = Vec3(10, 0, 198);  // even on the waypoint: safety wins
  const auto [cmd, next] = step_closed_loop(ctl, at, near);
  EXPECT_EQ(cmd.stiffness, Stiffness::low());
  EXPECT_EQ(cmd.delta_l, ctl.command.delta_l);
  EXPECT_EQ(next.current, 0u);
  EXPECT_TRUE(next.history.back().safety_hold);
  // First clear step restores the nominal stiffness, still no correction.
  const auto [resume, after] = step_closed_loop(next, at, {});
  EXPECT_EQ(resume.stiffness, Stiffness::high());
  EXPECT_TRUE(after.history.back().resumed);
}

TEST(Controller, ThermalSignatureIsTracked) {
  ControllerState ctl = tracking({Vec3(10, 0, 198)});
  ctl.config.thermal_target = 0.8;
  SensorReading r;
  r.hit = true;
  r.distance = 300.0;
  r.thermal = 0.85;
  PoseConfig at;
  at.tip = Vec3(0, 0, 200);
  EXPECT_TRUE(step_closed_loop(ctl, at, r).second.history.back().tracked);
  r.thermal = 0.95;
  EXPECT_FALSE(step_closed_loop(ctl, at, r).second.history.back().tracked);
}

TEST(Controller, ValidatesConfiguration) {
  ControllerState ctl = tracking({Vec3(0, 0, 200)});
  ctl.config.gain = 0.0;
  EXPECT_THROW(step_closed_loop(ctl, {}, {}), ParameterError);
  ControllerState done = tracking({});
  EXPECT_THROW(step_closed_loop(done, {}, {}), ParameterError);
}

TEST(Controller, ClosedLoopOnThePlantConvergesMonotonically) {
  const Robot& robot = desk_robot();
  ControllerState ctl = tracking(reachable(robot));
  ctl.config.waypoint_tol = 0.02;
  Plant plant(robot);
  ActuationCommand cmd = ctl.command;
  std::vector<std::vector<double>> err(ctl.waypoints.size());
  int steps = 0;
  while (!ctl.done() && steps < 400) {
    plant.apply(cmd);
    const std::size_t w = ctl.current;
    auto [next, state] = step_closed_loop(ctl, plant.pose(), {});
    ASSERT_FALSE(state.history.back().gave_up);
    err[w].push_back(state.history.back().error_norm);
    ctl = std::move(state);
    cmd = next;
    ++steps;
  }
  ASSERT_TRUE(ctl.done());
  EXPECT_EQ(ctl.history.size(), static_cast<std::size_t>(steps));
  for (const auto& e : err)
    for (std::size_t k = 1; k < e.size() && k < 10; ++k) EXPECT_LT(e[k], e[k - 1]);
  EXPECT_LT(err.back().back(), 0.05 * robot.dyn.model.params.base_radius);
}

TEST(Controller, GivesUpOnUnreachableWaypoints) {
  const Robot& robot = desk_robot();
  ControllerState ctl = tracking({Vec3(0, 0, 400)});
  ctl.config.max_steps_per_waypoint = 5;
  Plant plant(robot);
  ActuationCommand cmd = ctl.command;
  int steps = 0;
  while (!ctl.done() && steps < 20) {
    plant.apply(cmd);
    auto [next, state] = step_closed_loop(ctl, plant.pose(), {});
    ctl = std::move(state);
    cmd = next;
    ++steps;
  }
  ASSERT_TRUE(ctl.done());
  EXPECT_TRUE(ctl.history.back().gave_up);
  for (double v : cmd.delta_l) {
    EXPECT_LE(v, 0.0);
    EXPECT_GE(v, -ctl.config.stroke_limit);
  }
}

TEST(Controller, FeedforwardPullsOnly) {
  const ControllerState ctl = tracking({Vec3(20, 10, 195)});
  const auto cmd = initial_command(ctl);
  EXPECT_DOUBLE_EQ(std::max({cmd.delta_l[0], cmd.delta_l[1], cmd.delta_l[2]}), 0.0);
}

TEST(Controller, ModelJacobianHasAnAxialColumn) {
  const CCGeometry g;
  const Eigen::Matrix3d J = model_jacobian({0.0, 0.0, 0.0}, g);
  // Pulling all three equally moves the straight tip straight down... or up
  // by the same amount each: the common-mode response is along the axis.
  const Vec3 common = J * Vec3::Ones();
  EXPECT_NEAR(common.head<2>().norm(), 0.0, 1e-9);
  EXPECT_NEAR(std::abs(common.z()), 1.0, 1e-9);
  EXPECT_EQ(Eigen::FullPivLU<Eigen::Matrix3d>(J).rank(), 3);
}
