#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "tspine/analysis.hpp"
#include "tspine/robot.hpp"

namespace tspine {

inline constexpr int kFormatVersion = 1;

/// Everything persisted about a robot. A freshly generated topology has no
/// force densities, tendons or states; a form-found one has all of them.
struct ModelFile {
  StructureModel model;
  Materials materials;
  std::optional<ForceDensitySet> q;
  std::vector<NodeId> anchors;
  std::array<Tendon, 3> tendons;
  DegradationState degradation;
  std::optional<CCGeometry> geometry;
  std::optional<EquilibriumState> rest;
  std::optional<EquilibriumState> state;  ///< optional saved working state

  bool operator==(const ModelFile&) const = default;

  bool form_found() const { return q && rest && geometry; }
  /// Throws SchemaError unless `form_found()`.
  Robot robot() const;
  static ModelFile from_robot(const Robot& robot, std::optional<EquilibriumState> state = std::nullopt);
  static ModelFile from_topology(const StructureModel& model, const Materials& materials = {});
};

nlohmann::json to_json(const ModelFile& file);
/// Throws VersionError, SchemaError, DanglingReferenceError or
/// CountViolationError; nothing is returned on failure.
ModelFile model_from_json(const nlohmann::json& j);

void save_model(const ModelFile& file, const std::string& path);
ModelFile load_model(const std::string& path);

// Pieces shared with the session protocol and the CLI.
nlohmann::json to_json(const Vec3& v);
nlohmann::json to_json(const EquilibriumState& s);
nlohmann::json to_json(const ActuationCommand& c);
nlohmann::json to_json(const Environment& env);
nlohmann::json to_json(const SensorReading& r);
nlohmann::json to_json(const WorkspaceMetrics& m);
nlohmann::json to_json(const ConfigurationMap& map);

Vec3 vec3_from_json(const nlohmann::json& j);
/// Accepts "high", "low" or a positive number.
Stiffness stiffness_from_json(const nlohmann::json& j);
ActuationCommand command_from_json(const nlohmann::json& j);
Environment environment_from_json(const nlohmann::json& j);

}  // namespace tspine
