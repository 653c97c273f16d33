#pragma once

#include "tspine/dynamics.hpp"
#include "tspine/kinematics.hpp"
#include "tspine/prestress.hpp"

namespace tspine {

struct FormFindOptions {
  PrestressOptions prestress;
  TargetMap targets;  ///< optional adaptive targets (member index -> target), both end rings held
  AdaptOptions adapt;
  /// Release the top ring and let the prestress find its own shape. Without
  /// it the rest state is the FDM shape with both end rings held.
  bool settle = true;
  RelaxParams relax{0.0, 0.0, 400000, 1e-11, 0};
};

/// A form-found, tendon-routed robot ready to be actuated.
struct Robot {
  DynamicsModel dyn;
  ForceDensitySet q;       ///< force densities of the rest state
  EquilibriumState rest;   ///< zero-actuation equilibrium, base ring held
  CCGeometry geometry;
  bool adapt_converged = true;

  Triple tendon_rest_lengths() const;
  /// Base-ring centroid: origin of tip coordinates.
  Vec3 base_center() const;
  /// Tip relative to the base centre for a set of positions.
  Vec3 tip_of(const std::vector<Vec3>& positions) const;
};

/// Self-stress search, FDM with both end rings held (optionally adapted to
/// targets), rest-length assignment, release of the top ring, and a final
/// FDM polish on the settled shape. Tendons are routed on the result.
Robot form_find(const StructureModel& model, const Materials& materials = {}, const FormFindOptions& options = {});

/// Routes tendon i (azimuth 2pi(i-1)/3) through the node nearest that
/// azimuth on every ring; rest length = path length at `positions`.
void route_tendons(DynamicsModel& dyn, const std::vector<Vec3>& positions);

/// CC parameters measured from the rest state: d = mean radial offset of the
/// routed nodes (or materials.tendon_pitch when set), s = rest tip height,
/// beta_max = stroke_limit / d.
CCGeometry derive_geometry(const DynamicsModel& dyn, const std::vector<Vec3>& positions);

/// Throws ParameterError when a tendon command exceeds the stroke limit or a
/// stiffness scale is not positive.
void check_command(const ActuationCommand& command, const Materials& materials);

/// Pose measured on the structure: tip relative to the base centre, beta the
/// tilt of the top ring normal, alpha its azimuth.
PoseConfig measure_pose(const Robot& robot, const std::vector<Vec3>& positions);

/// Quasi-static plant: every command is relaxed to equilibrium, warm-started
/// from the previous state.
class Plant {
 public:
  explicit Plant(Robot robot, RelaxParams params = {});

  const Robot& robot() const { return robot_; }
  const EquilibriumState& state() const { return state_; }
  const ActuationCommand& command() const { return command_; }
  bool converged() const { return converged_; }
  long last_steps() const { return last_steps_; }

  const EquilibriumState& apply(const ActuationCommand& command);
  /// Restarts from the rest state.
  void reset();

  Vec3 tip() const { return robot_.tip_of(state_.positions); }
  PoseConfig pose() const { return measure_pose(robot_, state_.positions); }

 private:
  Robot robot_;
  RelaxParams params_;
  EquilibriumState state_;
  ActuationCommand command_;
  bool converged_ = true;
  long last_steps_ = 0;
};

}  // namespace tspine
