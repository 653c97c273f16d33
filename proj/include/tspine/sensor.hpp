#pragma once

#include <limits>
#include <vector>

#include "tspine/kinematics.hpp"

namespace tspine {

/// Infinite plane; `normal` need not be unit length.
struct Wall {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitX();
  double thermal = 0.0;
};

struct Sphere {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
  double thermal = 0.0;
};

/// Axis-aligned box.
struct Box {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Ones();
  double thermal = 0.0;
};

struct Environment {
  std::vector<Wall> walls;
  std::vector<Sphere> spheres;
  std::vector<Box> boxes;
  double max_range = 1000.0;

  bool empty() const { return walls.empty() && spheres.empty() && boxes.empty(); }
};

struct SensorReading {
  bool hit = false;
  double distance = std::numeric_limits<double>::infinity();  ///< inf when nothing is hit
  double thermal = 0.0;
  double t = 0.0;
};

/// Casts a ray from the tip along `direction`; nearest surface within
/// `env.max_range` wins.
SensorReading sense_infrared(const Environment& env, const PoseConfig& tip_pose, const Vec3& direction, double t = 0.0);

}  // namespace tspine
