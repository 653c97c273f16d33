#pragma once

#include <map>
#include <memory>
#include <utility>

#include <Eigen/Core>
#include <string>
#include <vector>

#include "tspine/command.hpp"
#include "tspine/force_density.hpp"
#include "tspine/topology.hpp"

namespace tspine {

/// Named material presets. Stiffness values are numerically convenient
/// defaults, not measured properties of the named materials.
struct MaterialPreset {
  std::string name;
  double axial_stiffness;  ///< EA, newtons
};

MaterialPreset cable_preset(const std::string& name);   ///< "rubber_thread"
MaterialPreset strut_preset(const std::string& name);   ///< "carbon_fiber_tube"
MaterialPreset tendon_preset(const std::string& name);  ///< "dyneema_thread"

/// Mechanical and actuator properties. Units: mm, N, kg.
struct Materials {
  std::string cable_material = "rubber_thread";
  double cable_stiffness = 40.0;  ///< cable EA
  std::string strut_material = "carbon_fiber_tube";
  double strut_stiffness_ratio = 1000.0;  ///< strut EA / cable EA
  std::string spine_material = "pvc_corrugated_pipe";
  std::string tendon_material = "dyneema_thread";
  double tendon_stiffness = 20.0;  ///< tendon EA, includes winder compliance
  double node_mass = 0.005;
  double winder_radius = 10.0;
  double tendon_pitch = 0.0;  ///< 0: derived from the routed geometry
  double stroke_limit = 30.0;
  double max_tension = 50.0;  ///< warning threshold for cable overload
  double gravity = 0.0;       ///< acceleration along -z; 0 disables
  StiffnessLevels stiffness;

  double strut_stiffness() const { return cable_stiffness * strut_stiffness_ratio; }
  /// EA of a member of the given kind.
  double axial_stiffness(MemberKind kind) const { return is_cable(kind) ? cable_stiffness : strut_stiffness(); }

  bool operator==(const Materials&) const = default;
};

/// Tendon i runs from a base node up through one routing node per ring.
struct Tendon {
  double azimuth = 0.0;
  std::vector<NodeId> route;
  double rest_length = 0.0;

  bool operator==(const Tendon&) const = default;
};

struct DegradationState {
  double elapsed = 0.0;     ///< s
  double decay_rate = 0.0;  ///< 1/tau, 1/s
  double friction_mu = 0.0;
  std::map<NodeId, double> wrap_angles;  ///< routing joint -> wrap (rad); geometric angle when absent

  bool operator==(const DegradationState&) const = default;
};

void check_degradation(const DegradationState& d);

/// Everything the integrator needs: topology with rest lengths, materials,
/// anchored nodes, tendons and friction.
struct DynamicsModel {
  StructureModel model;
  Materials materials;
  std::vector<NodeId> anchors;
  std::array<Tendon, 3> tendons;
  DegradationState degradation;
};

struct RelaxParams {
  double dt = 0.0;        ///< 0: chosen from the stability bound
  double damping = 0.0;   ///< viscous coefficient; 0: critical for the softest mode at the start
  long max_steps = 400000;
  double tol = 1e-10;     ///< relative to the prestress force scale
  long record_every = 0;  ///< 0: record only the initial and final states
};

struct RelaxResult {
  std::vector<EquilibriumState> trajectory;
  bool converged = false;
  long steps = 0;

  const EquilibriumState& final_state() const { return trajectory.back(); }
};

/// Assigns member rest lengths so the springs reproduce `state`'s forces at
/// `state`'s geometry (at prestress scale 1).
void assign_rest_lengths(StructureModel& model, const Materials& materials, const EquilibriumState& state);

/// Explicit damped time-stepping (semi-implicit Euler) of the point-mass
/// spring network under `command`. Cables and tendons are tension-only.
RelaxResult relax_dynamics(const DynamicsModel& dyn, const EquilibriumState& start, const ActuationCommand& command,
                           const RelaxParams& params = {});

/// Stateful form of `relax_dynamics`: keeps positions and velocities across
/// calls so a command can change mid-motion (used by the tick-driven plant).
class Integrator {
 public:
  Integrator(DynamicsModel dyn, const EquilibriumState& start, const ActuationCommand& command,
             const RelaxParams& params = {});
  ~Integrator();
  Integrator(Integrator&&) noexcept;
  Integrator& operator=(Integrator&&) noexcept;

  /// Switches the command; positions and velocities carry over.
  void set_command(const ActuationCommand& command);
  const ActuationCommand& command() const;

  /// Runs up to `steps` steps. With `stop_when_converged`, stops at the first
  /// convergence check that passes. Returns whether the last check passed.
  bool advance(long steps, bool stop_when_converged = true);

  EquilibriumState state() const;
  const std::vector<Vec3>& positions() const;
  const DynamicsModel& model() const;
  long steps_taken() const;
  bool converged() const;
  double dt() const;
  double damping() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Tangent stiffness -df/dx over the free (non-anchored) nodes, 3 rows per
/// node in model order: material plus geometric terms of members and taut
/// tendons (friction ignored). Slack cables contribute nothing.
Eigen::MatrixXd tangent_stiffness(const DynamicsModel& dyn, const std::vector<Vec3>& positions,
                                  const ActuationCommand& command);

/// Smallest and largest eigenvalues of `tangent_stiffness`.
std::pair<double, double> stiffness_bounds(const DynamicsModel& dyn, const std::vector<Vec3>& positions,
                                           const ActuationCommand& command);

/// Tendon tensions at the actuator end for a state under `command`.
Triple tendon_tensions(const DynamicsModel& dyn, const EquilibriumState& state, const ActuationCommand& command);

/// Member forces of the spring network at `positions` and prestress `scale`.
std::vector<double> spring_forces(const DynamicsModel& dyn, const std::vector<Vec3>& positions, double scale);

/// Centroid of the top ring.
Vec3 tip_position(const StructureModel& model, const std::vector<Vec3>& positions);
/// Unit normal of the top ring (Newell's method), oriented away from the base.
Vec3 tip_normal(const StructureModel& model, const std::vector<Vec3>& positions);

}  // namespace tspine
