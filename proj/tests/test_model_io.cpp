#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "support.hpp"
#include "tspine/error.hpp"
#include "tspine/model_io.hpp"

using namespace tspine;
using nlohmann::json;
using tspine::test::desk_robot;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("tspine_test_" + name);
}

}  // namespace

TEST(ModelIo, TopologyRoundTrips) {
  const auto file = ModelFile::from_topology(test::model_of(5, 6));
  EXPECT_FALSE(file.form_found());
  EXPECT_EQ(model_from_json(to_json(file)), file);
  EXPECT_THROW(file.robot(), SchemaError);
}

TEST(ModelIo, FormFoundRobotRoundTripsThroughDisk) {
  Robot r = desk_robot();
  r.dyn.degradation.friction_mu = 0.1;
  r.dyn.degradation.wrap_angles[r.dyn.tendons[1].route[2]] = 0.7;
  Plant p(r);
  p.apply({{-4.0, 0.0, -2.0}, Stiffness::low()});
  const auto file = ModelFile::from_robot(r, p.state());
  const auto path = temp_file("roundtrip.json");
  save_model(file, path.string());
  const auto back = load_model(path.string());
  std::filesystem::remove(path);
  EXPECT_EQ(back, file);
  const Robot rb = back.robot();
  EXPECT_EQ(rb.rest, r.rest);
  EXPECT_EQ(rb.dyn.tendons, r.dyn.tendons);
  EXPECT_EQ(rb.geometry, r.geometry);
  // Same file, same physics.
  Plant pb(rb);
  pb.apply({{-4.0, 0.0, -2.0}, Stiffness::low()});
  EXPECT_EQ(pb.tip(), p.tip());
}

TEST(ModelIo, MissingOrWrongVersion) {
  json j = to_json(ModelFile::from_topology(test::model_of()));
  j["format_version"] = kFormatVersion + 1;
  EXPECT_THROW(model_from_json(j), VersionError);
  j.erase("format_version");
  EXPECT_THROW(model_from_json(j), VersionError);
}

TEST(ModelIo, MissingMemberIsACountViolation) {
  json j = to_json(ModelFile::from_topology(test::model_of()));
  j["members"].erase(j["members"].begin());
  EXPECT_THROW(model_from_json(j), CountViolationError);
}

TEST(ModelIo, UnknownNodeIsADanglingReference) {
  json j = to_json(ModelFile::from_topology(test::model_of()));
  j["members"][0]["b"] = "A9-9";
  EXPECT_THROW(model_from_json(j), DanglingReferenceError);
  json k = to_json(ModelFile::from_robot(desk_robot()));
  k["tendons"][0]["route"][1] = "B7-0";
  EXPECT_THROW(model_from_json(k), DanglingReferenceError);
}

TEST(ModelIo, MalformedContentIsASchemaError) {
  const json good = to_json(ModelFile::from_topology(test::model_of()));
  json j = good;
  j["members"][0]["kind"] = "rope";
  EXPECT_THROW(model_from_json(j), SchemaError);
  j = good;
  j["nodes"][0]["seed"] = json::array({1, 2});
  EXPECT_THROW(model_from_json(j), SchemaError);
  j = good;
  j["materials"]["cable_stiffness"] = "stiff";
  EXPECT_THROW(model_from_json(j), SchemaError);
  EXPECT_THROW(model_from_json(json::array()), SchemaError);
}

TEST(ModelIo, UnreadableFiles) {
  const auto path = temp_file("garbage.json");
  std::ofstream(path) << "{ not json";
  EXPECT_THROW(load_model(path.string()), SchemaError);
  std::filesystem::remove(path);
  EXPECT_THROW(load_model(temp_file("does_not_exist.json").string()), ParameterError);
}

TEST(ModelIo, PayloadHelpers) {
  EXPECT_EQ(vec3_from_json(json::array({1.5, -2, 3})), Vec3(1.5, -2, 3));
  EXPECT_THROW(vec3_from_json(json::array({1, 2})), SchemaError);
  EXPECT_EQ(stiffness_from_json("low"), Stiffness::low());
  EXPECT_EQ(stiffness_from_json(0.5), Stiffness::explicit_scale(0.5));
  EXPECT_THROW(stiffness_from_json("soft"), SchemaError);
  EXPECT_THROW(stiffness_from_json(-1.0), SchemaError);
  const ActuationCommand c{{-1.0, -2.0, 0.0}, Stiffness::low()};
  EXPECT_EQ(command_from_json(to_json(c)), c);
  Environment env;
  env.walls.push_back({Vec3(0, 0, 100), Vec3(0, 0, -1), 0.5});
  env.spheres.push_back({Vec3(1, 2, 3), 4.0, 0.0});
  env.boxes.push_back({Vec3(0, 0, 0), Vec3(1, 1, 1), 1.0});
  const auto back = environment_from_json(to_json(env));
  ASSERT_EQ(back.walls.size(), 1u);
  EXPECT_EQ(back.walls[0].point, env.walls[0].point);
  EXPECT_EQ(back.spheres[0].radius, 4.0);
  EXPECT_EQ(back.boxes[0].thermal, 1.0);
}
