#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "tspine/robot.hpp"
#include "tspine/sensor.hpp"

namespace tspine {

struct WorkspaceMetrics {
  double accessible_distance = 0.0;  ///< D: max axial tip excursion from rest
  double working_radius = 0.0;       ///< R: max radial tip distance from the axis
  double reach_angle = 0.0;          ///< theta_max: max tilt of the top ring from the rest axis, rad
  std::string stiffness;
  int samples = 0;
  int converged = 0;
  bool valid = false;  ///< at least 90% of samples converged
};

/// per_axis^3 tendon commands spanning [-stroke, 0] per tendon (tendons can
/// only pull; lengthening leaves them slack).
std::vector<Triple> lattice_grid(double stroke, int per_axis = 5);

/// Relaxes every grid command from the rest state. Non-converged samples are
/// excluded from the metrics; throws SweepError when none converge.
WorkspaceMetrics sweep_workspace(const Robot& robot, const Stiffness& stiffness, const std::vector<Triple>& grid,
                                 const RelaxParams& params = {});

struct ConfigurationSample {
  double alpha = 0.0;
  double beta = 0.0;
  Triple delta_l{};
  Triple strains{};
  Vec3 tip = Vec3::Zero();
  bool converged = false;
};

/// 13 yaw values 2pi k/13 and 7 bend values beta_max j/6.
std::vector<double> default_alphas();
std::vector<double> default_betas(const CCGeometry& g);

/// IK -> plant -> strains for every (alpha, beta); sorted by (alpha, beta).
std::vector<ConfigurationSample> strain_map(const Robot& robot, const std::vector<double>& alphas,
                                            const std::vector<double>& betas, const Stiffness& stiffness,
                                            const RelaxParams& params = {});

struct ExplorationEntry {
  double t = 0.0;
  PoseConfig pose;  ///< achieved
  ActuationCommand command;
  SensorReading sensor;
  double distance_to_trajectory = 0.0;
  bool converged = true;
};

struct ExplorationLog {
  std::vector<ExplorationEntry> entries;
};

/// Throws LogIntegrityError unless timestamps strictly increase.
void check_log(const ExplorationLog& log);

enum class CellClass { Unknown, Manipulatable, Unstructured };
std::string to_string(CellClass c);

struct EntryRef {
  std::size_t log = 0;
  std::size_t entry = 0;
  double t = 0.0;
  auto operator<=>(const EntryRef&) const = default;
};

using CellKey = std::array<int, 3>;

struct Cell {
  CellClass cls = CellClass::Unknown;
  std::vector<EntryRef> evidence;  ///< sorted by time
};

struct ConfigurationMap {
  double cell_size = 10.0;
  std::map<CellKey, Cell> cells;  ///< only visited cells; everything else is unknown

  CellClass at(const Vec3& p) const;
  CellKey key_of(const Vec3& p) const;
};

/// Cells with a converged visit whose sensor saw nothing closer than
/// `safety_distance` are manipulatable; a sub-threshold reading or a failed
/// convergence marks the tip's cell unstructured, which takes precedence.
ConfigurationMap build_configuration_map(const std::vector<ExplorationLog>& logs, double cell_size,
                                         double safety_distance = 50.0);

struct ExploreOptions {
  double dt = 1.0;                 ///< time between entries
  double safety_distance = 50.0;
  Stiffness stiffness = Stiffness::high();
  RelaxParams relax;
};

/// Scripted exploration: visits each (alpha, beta) pose open-loop, senses
/// along the top ring normal, and logs. A sub-threshold reading makes the
/// next entry a hold at low stiffness.
ExplorationLog explore(const Robot& robot, const Environment& env, const std::vector<std::pair<double, double>>& poses,
                       const ExploreOptions& options = {});

}  // namespace tspine
