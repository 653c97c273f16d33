#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"
#include "tspine/analysis.hpp"
#include "tspine/error.hpp"
#include "tspine/export.hpp"

using namespace tspine;
using std::numbers::pi;
using tspine::test::desk_robot;

TEST(Sweep, LatticeSpansThePullRange) {
  const auto grid = lattice_grid(30.0, 3);
  ASSERT_EQ(grid.size(), 27u);
  EXPECT_EQ(grid.front(), (Triple{-30.0, -30.0, -30.0}));
  EXPECT_EQ(grid.back(), (Triple{0.0, 0.0, 0.0}));
  for (const auto& g : grid)
    for (double v : g) EXPECT_TRUE(v == -30.0 || v == -15.0 || v == 0.0);
}

TEST(Sweep, ZeroActuationHasNoWorkspace) {
  const auto m = sweep_workspace(desk_robot(), Stiffness::high(), {Triple{0, 0, 0}});
  EXPECT_TRUE(m.valid);
  EXPECT_EQ(m.samples, 1);
  EXPECT_NEAR(m.accessible_distance, 0.0, 1e-6);
  EXPECT_NEAR(m.working_radius, 0.0, 1e-6);
  EXPECT_NEAR(m.reach_angle, 0.0, 1e-6);
}

TEST(Sweep, MetricsMatchDirectPlantRuns) {
  const Robot& r = desk_robot();
  const std::vector<Triple> grid{{-10, 0, 0}, {-10, -10, -10}, {0, -20, 0}};
  const auto m = sweep_workspace(r, Stiffness::high(), grid);
  const Vec3 rest = r.tip_of(r.rest.positions);
  double D = 0.0, R = 0.0;
  for (const auto& dl : grid) {
    Plant p(r);
    p.apply({dl, Stiffness::high()});
    D = std::max(D, std::abs(p.tip().z() - rest.z()));
    R = std::max(R, p.tip().head<2>().norm());
  }
  EXPECT_NEAR(m.accessible_distance, D, 1e-6);
  EXPECT_NEAR(m.working_radius, R, 1e-6);
  EXPECT_EQ(m.converged, 3);
  EXPECT_GT(m.reach_angle, 0.0);
}

TEST(Sweep, LowStiffnessReachesFurther) {
  const Robot& r = desk_robot();
  const auto grid = lattice_grid(r.dyn.materials.stroke_limit, 3);
  const auto hi = sweep_workspace(r, Stiffness::high(), grid);
  const auto lo = sweep_workspace(r, Stiffness::low(), grid);
  EXPECT_GT(lo.accessible_distance, hi.accessible_distance);
  EXPECT_GT(lo.working_radius, hi.working_radius);
  EXPECT_GT(lo.reach_angle, hi.reach_angle);
}

TEST(Sweep, EmptyGridIsRejected) {
  EXPECT_THROW(sweep_workspace(desk_robot(), Stiffness::high(), {}), ParameterError);
}

TEST(StrainMap, GridDefaults) {
  const auto a = default_alphas();
  ASSERT_EQ(a.size(), 13u);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], 2.0 * pi * static_cast<double>(k) / 13.0, 1e-15);
  const CCGeometry g;
  const auto b = default_betas(g);
  ASSERT_EQ(b.size(), 7u);
  EXPECT_EQ(b.front(), 0.0);
  EXPECT_NEAR(b.back(), g.beta_max, 1e-15);
}

TEST(StrainMap, StraightPoseHasNoStrainAndStrainIsLengthOverRest) {
  const Robot& r = desk_robot();
  const auto samples = strain_map(r, {0.0, 1.0}, {0.0, 0.3}, Stiffness::high());
  ASSERT_EQ(samples.size(), 4u);
  const auto L0 = r.tendon_rest_lengths();
  for (const auto& s : samples) {
    EXPECT_TRUE(s.converged);
    for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(s.strains[i], s.delta_l[i] / L0[i]);
    if (s.beta == 0.0)
      for (double e : s.strains) EXPECT_EQ(e, 0.0);
  }
  EXPECT_LE(samples[0].alpha, samples[2].alpha);
}

TEST(StrainMap, AzimuthShiftPermutesTendons) {
  // Rotating the request by 2pi/3 hands each tendon's strain to its neighbour.
  const Robot& r = desk_robot();
  const double a = 0.4, b = 0.3;
  const auto s = strain_map(r, {a, a + 2.0 * pi / 3.0}, {b}, Stiffness::high());
  ASSERT_EQ(s.size(), 2u);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(s[1].delta_l[(i + 1) % 3], s[0].delta_l[i], 1e-9);
}

namespace {

ExplorationEntry entry(double t, Vec3 tip, double distance = std::numeric_limits<double>::infinity(),
                       bool converged = true) {
  ExplorationEntry e;
  e.t = t;
  e.pose.tip = tip;
  e.sensor.hit = std::isfinite(distance);
  e.sensor.distance = distance;
  e.converged = converged;
  return e;
}

}  // namespace

TEST(ConfigurationMap, LogsMustBeTimeOrdered) {
  ExplorationLog ok{{entry(0, Vec3::Zero()), entry(1, Vec3::Zero())}};
  EXPECT_NO_THROW(check_log(ok));
  ExplorationLog bad{{entry(1, Vec3::Zero()), entry(1, Vec3::Zero())}};
  EXPECT_THROW(check_log(bad), LogIntegrityError);
  EXPECT_THROW(build_configuration_map({bad}, 10.0), LogIntegrityError);
}

TEST(ConfigurationMap, ClassifiesCellsAndUnstructuredWins) {
  ExplorationLog a{{entry(0, Vec3(1, 1, 1)), entry(1, Vec3(25, 1, 1)), entry(2, Vec3(45, 1, 1), 200.0)}};
  ExplorationLog b{{entry(0.5, Vec3(2, 2, 2), 20.0), entry(1.5, Vec3(46, 2, 2), 80.0, false)}};
  const auto map = build_configuration_map({a, b}, 10.0, 50.0);
  EXPECT_EQ(map.at(Vec3(1, 1, 1)), CellClass::Unstructured);   // b saw something close there
  EXPECT_EQ(map.at(Vec3(25, 1, 1)), CellClass::Manipulatable);
  EXPECT_EQ(map.at(Vec3(45, 1, 1)), CellClass::Unstructured);  // failed convergence
  EXPECT_EQ(map.at(Vec3(-100, 0, 0)), CellClass::Unknown);
  const auto& ev = map.cells.at(map.key_of(Vec3(1, 1, 1))).evidence;
  ASSERT_EQ(ev.size(), 2u);
  EXPECT_LT(ev[0].t, ev[1].t);
}

TEST(ConfigurationMap, DeterministicAndOrderIndependent) {
  ExplorationLog a{{entry(0, Vec3(1, 1, 1)), entry(1, Vec3(25, 1, 1), 10.0)}};
  ExplorationLog b{{entry(0.5, Vec3(12, 2, 2))}};
  const auto ab = build_configuration_map({a, b}, 10.0);
  const auto ba = build_configuration_map({b, a}, 10.0);
  ASSERT_EQ(ab.cells.size(), ba.cells.size());
  for (const auto& [k, c] : ab.cells) EXPECT_EQ(ba.cells.at(k).cls, c.cls);
  EXPECT_EQ(ab.cells.size(), build_configuration_map({a, b}, 10.0).cells.size());
}

TEST(Explore, EmptyEnvironmentIsAllManipulatable) {
  const Robot& r = desk_robot();
  const auto log = explore(r, {}, {{0.0, 0.0}, {0.5, 0.3}, {2.0, 0.5}});
  ASSERT_EQ(log.entries.size(), 3u);
  EXPECT_NO_THROW(check_log(log));
  const auto map = build_configuration_map({log}, 5.0);
  for (const auto& [k, c] : map.cells) EXPECT_EQ(c.cls, CellClass::Manipulatable);
}

TEST(Explore, CloseObstacleTriggersACompliantHold) {
  const Robot& r = desk_robot();
  Environment env;
  const double tip_z = r.tip_of(r.rest.positions).z();
  env.walls.push_back({Vec3(0, 0, tip_z + 20.0), Vec3(0, 0, -1), 0.0});
  const auto log = explore(r, env, {{0.0, 0.0}, {0.5, 0.2}});
  ASSERT_GE(log.entries.size(), 2u);
  EXPECT_TRUE(log.entries[0].sensor.hit);
  EXPECT_LT(log.entries[0].sensor.distance, 50.0);
  EXPECT_EQ(log.entries[1].command.stiffness, Stiffness::low());
  const auto map = build_configuration_map({log}, 10.0);
  EXPECT_EQ(map.at(log.entries[0].pose.tip), CellClass::Unstructured);
}

TEST(Export, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 123456.789, 0.0})
    EXPECT_EQ(std::stod(format_double(v)), v);
}

TEST(Export, TrajectoryCsvRoundTrips) {
  const Robot& r = desk_robot();
  Plant p(r);
  const ActuationCommand cmd{{-5.0, -1.0, 0.0}, Stiffness::low()};
  p.apply(cmd);
  const std::vector<TrajectoryRow> rows{trajectory_row(r, 0.0, {}, r.rest), trajectory_row(r, 1.0, cmd, p.state())};
  std::stringstream ss;
  write_trajectory_csv(ss, rows);
  std::string header;
  std::getline(std::stringstream(ss.str()), header);
  EXPECT_EQ(header, "t,tip_x,tip_y,tip_z,dL1,dL2,dL3,theta1,theta2,theta3,eps1,eps2,eps3,stiffness,residual");
  const auto back = read_trajectory_csv(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].tip, rows[1].tip);
  EXPECT_EQ(back[1].delta_l, cmd.delta_l);
  EXPECT_EQ(back[1].stiffness, "low");
  EXPECT_DOUBLE_EQ(back[1].theta[0], -5.0 / r.dyn.materials.winder_radius);
}

TEST(Export, ObjHasOneVertexPerNodeAndOneLinePerMember) {
  const Robot& r = desk_robot();
  std::stringstream ss;
  write_obj(ss, r.dyn.model, r.rest.positions);
  int v = 0, l = 0;
  for (std::string line; std::getline(ss, line);) {
    v += line.rfind("v ", 0) == 0;
    l += line.rfind("l ", 0) == 0;
  }
  EXPECT_EQ(v, r.dyn.model.node_count());
  EXPECT_EQ(l, r.dyn.model.member_count());
}
