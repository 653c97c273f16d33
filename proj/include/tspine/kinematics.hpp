#pragma once

#include <numbers>

#include <Eigen/Core>

#include "tspine/command.hpp"
#include "tspine/topology.hpp"

namespace tspine {

struct MotorAngles {
  Triple theta{0.0, 0.0, 0.0};  ///< rad
  double winder_radius = 1.0;
};

/// theta_i = dL_i / r.
MotorAngles lengths_to_angles(const Triple& delta_l, double winder_radius);
/// dL_i = theta_i * r.
Triple angles_to_lengths(const MotorAngles& angles);

/// eps_i = dL_i / L0_i.
Triple tendon_strain(const Triple& delta_l, const Triple& rest_lengths);

struct PoseConfig {
  double alpha = 0.0;  ///< yaw, [0, 2pi)
  double beta = 0.0;   ///< bend, >= 0
  Vec3 tip = Vec3::Zero();
};

/// Single-segment constant-curvature model of the spine.
struct CCGeometry {
  double d = 40.0;  ///< tendon pitch radius
  Triple azimuth{0.0, 2.0 * std::numbers::pi / 3.0, 4.0 * std::numbers::pi / 3.0};
  double s = 200.0;         ///< arc length (rest height)
  double beta_max = 0.75;   ///< bend limit, rad

  bool operator==(const CCGeometry&) const = default;
};

/// Wraps alpha into [0, 2pi); alpha is 0 when beta is 0.
void canonicalize(PoseConfig& pose);

/// Tip of a constant-curvature arc of length g.s bent by beta toward alpha.
Vec3 cc_tip(double alpha, double beta, const CCGeometry& g);

/// dL_i = -beta d cos(alpha - phi_i). Throws ReachabilityError past beta_max.
ActuationCommand ik_constant_curvature(double alpha, double beta, const CCGeometry& g,
                                       Stiffness stiffness = Stiffness::high());

struct FkResult {
  PoseConfig pose;
  bool projected = false;  ///< input had a common-mode component that was removed
};

/// Inverse of the IK map. Any common-mode part of dL is projected out.
FkResult fk_constant_curvature(const Triple& delta_l, const CCGeometry& g);

/// d(tip)/d(dL) of the CC model at `delta_l` (3x3, rank <= 2).
Eigen::Matrix3d cc_jacobian(const Triple& delta_l, const CCGeometry& g);

/// CC pose whose tip is closest to `target` (bend plane through the target's
/// azimuth, beta by 1D search). Used to seed tracking commands.
PoseConfig cc_pose_for_tip(const Vec3& target, const CCGeometry& g);

}  // namespace tspine
