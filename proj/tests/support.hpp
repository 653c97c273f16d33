#pragma once

#include <numbers>

#include "tspine/robot.hpp"

namespace tspine::test {

inline StructureModel model_of(int n = 3, int m = 6) {
  TopologyParams p;
  p.n = n;
  p.m = m;
  p.twist = std::numbers::pi / n;
  return generate_topology(p);
}

// Form-finding is deterministic; share one desk robot per test binary.
inline const Robot& desk_robot() {
  static const Robot robot = form_find(model_of());
  return robot;
}

inline std::vector<NodeId> end_rings(const StructureModel& model) {
  auto ends = model.base_ring();
  for (const auto& id : model.top_ring()) ends.push_back(id);
  return ends;
}

inline double azimuth_gap(double a, double b) {
  double d = std::fmod(std::abs(a - b), 2.0 * std::numbers::pi);
  return std::min(d, 2.0 * std::numbers::pi - d);
}

/// Rotation about +z.
inline Vec3 rotz(const Vec3& v, double angle) {
  return {std::cos(angle) * v.x() - std::sin(angle) * v.y(), std::sin(angle) * v.x() + std::cos(angle) * v.y(), v.z()};
}

}  // namespace tspine::test
