#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "tspine/kinematics.hpp"
#include "tspine/sensor.hpp"

namespace tspine {

struct ControllerConfig {
  double gain = 0.5;
  double waypoint_tol = 0.5;       ///< tip error (mm) at which a waypoint counts as reached
  int max_steps_per_waypoint = 60; ///< give up on a waypoint after this many corrections
  double safety_distance = 50.0;   ///< sensor distance that triggers the compliance hold
  std::optional<double> thermal_target;
  double thermal_tol = 0.1;
  bool feedforward = true;          ///< seed each waypoint with the CC inverse
  bool pull_only = true;            ///< tendons only pull: commands stay in [-stroke, 0]
  bool learn = true;                ///< Broyden-update the model Jacobian from observed motion
  double damping = 0.05;            ///< damped least-squares factor, relative to the largest singular value
  double max_step = 10.0;           ///< largest per-tendon correction per step (mm)
  double stroke_limit = 30.0;
  Stiffness stiffness = Stiffness::high();  ///< nominal level outside safety holds
};

struct ControllerRecord {
  ActuationCommand command;  ///< emitted
  PoseConfig achieved;
  Vec3 error = Vec3::Zero();
  double error_norm = 0.0;
  std::size_t waypoint = 0;  ///< index the error refers to
  bool safety_hold = false;
  bool advanced = false;
  bool gave_up = false;
  bool tracked = false;  ///< thermal signature matched
  bool resumed = false;  ///< first clear step after a hold: nominal stiffness restored, no correction
};

struct ControllerState {
  ControllerConfig config;
  CCGeometry geometry;
  std::vector<Vec3> waypoints;  ///< tip targets relative to the base centre
  std::size_t current = 0;
  int steps_on_waypoint = 0;
  ActuationCommand command;  ///< last emitted
  std::vector<ControllerRecord> history;
  // Model Jacobian d(tip)/d(dL): CC bending plus an axial common-mode term,
  // refined by Broyden updates; kept across waypoints.
  Eigen::Matrix3d jacobian = Eigen::Matrix3d::Zero();
  bool has_jacobian = false;
  bool has_last = false;
  Triple last_delta_l{};
  Vec3 last_tip = Vec3::Zero();

  bool done() const { return current >= waypoints.size(); }
};

/// Throws ParameterError on a non-positive gain or tolerance.
void check_controller(const ControllerState& ctl);

/// Command that starts tracking the current waypoint (CC inverse when
/// feedforward is on, the held command otherwise).
ActuationCommand initial_command(const ControllerState& ctl);

/// Initial model Jacobian: CC bending derivatives plus one axial column
/// (pulling every tendon by the same amount shortens the spine along the tip
/// tangent).
Eigen::Matrix3d model_jacobian(const Triple& delta_l, const CCGeometry& g);

/// One proportional correction: dL += gain * J+ (waypoint - tip), J the
/// model Jacobian (damped pseudo-inverse). A sensor distance below the safety
/// threshold overrides everything with a hold at low stiffness; the first
/// clear step after a hold only restores the nominal stiffness (a pose
/// measured while softened says little about the stiff plant).
std::pair<ActuationCommand, ControllerState> step_closed_loop(ControllerState ctl, const PoseConfig& achieved,
                                                              const SensorReading& sensor);

}  // namespace tspine
