#include "tspine/kinematics.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "tspine/error.hpp"

namespace tspine {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

MotorAngles lengths_to_angles(const Triple& delta_l, double winder_radius) {
  if (!(winder_radius > 0.0)) throw ParameterError("winder_radius", "winder radius must be positive");
  MotorAngles out;
  out.winder_radius = winder_radius;
  for (std::size_t i = 0; i < 3; ++i) out.theta[i] = delta_l[i] / winder_radius;
  return out;
}

Triple angles_to_lengths(const MotorAngles& angles) {
  if (!(angles.winder_radius > 0.0)) throw ParameterError("winder_radius", "winder radius must be positive");
  Triple out{};
  for (std::size_t i = 0; i < 3; ++i) out[i] = angles.theta[i] * angles.winder_radius;
  return out;
}

Triple tendon_strain(const Triple& delta_l, const Triple& rest_lengths) {
  Triple out{};
  for (std::size_t i = 0; i < 3; ++i) {
    if (!(rest_lengths[i] > 0.0))
      throw ParameterError("rest_length", "tendon " + std::to_string(i + 1) + " rest length must be positive");
    out[i] = delta_l[i] / rest_lengths[i];
  }
  return out;
}

void canonicalize(PoseConfig& pose) {
  if (pose.beta == 0.0) {
    pose.alpha = 0.0;
    return;
  }
  pose.alpha = std::fmod(pose.alpha, kTwoPi);
  if (pose.alpha < 0.0) pose.alpha += kTwoPi;
  if (pose.alpha >= kTwoPi) pose.alpha = 0.0;
}

Vec3 cc_tip(double alpha, double beta, const CCGeometry& g) {
  if (beta == 0.0) return {0.0, 0.0, g.s};
  // (1 - cos b)/b and sin(b)/b, written to stay accurate for small b.
  const double h = std::sin(0.5 * beta);
  const double radial = g.s * 2.0 * h * h / beta;
  const double axial = g.s * std::sin(beta) / beta;
  return {radial * std::cos(alpha), radial * std::sin(alpha), axial};
}

ActuationCommand ik_constant_curvature(double alpha, double beta, const CCGeometry& g, Stiffness stiffness) {
  if (!(g.d > 0.0)) throw ParameterError("tendon_pitch", "tendon pitch radius must be positive");
  if (!(beta >= 0.0)) throw ReachabilityError("bend angle must be non-negative");
  if (beta > g.beta_max)
    throw ReachabilityError("bend angle " + std::to_string(beta) + " exceeds the limit " + std::to_string(g.beta_max));
  ActuationCommand cmd;
  cmd.stiffness = stiffness;
  if (beta == 0.0) return cmd;
  for (std::size_t i = 0; i < 3; ++i) cmd.delta_l[i] = -beta * g.d * std::cos(alpha - g.azimuth[i]);
  return cmd;
}

FkResult fk_constant_curvature(const Triple& delta_l, const CCGeometry& g) {
  if (!(g.d > 0.0)) throw ParameterError("tendon_pitch", "tendon pitch radius must be positive");
  FkResult out;
  const double mean = (delta_l[0] + delta_l[1] + delta_l[2]) / 3.0;
  const double mag = std::abs(delta_l[0]) + std::abs(delta_l[1]) + std::abs(delta_l[2]);
  out.projected = std::abs(mean) > 1e-9 * std::max(1.0, mag);
  // Least squares on dL_i = -beta d (cos a cos phi_i + sin a sin phi_i) + c.
  Eigen::Matrix3d A;
  Eigen::Vector3d b;
  for (int i = 0; i < 3; ++i) {
    const double phi = g.azimuth[static_cast<std::size_t>(i)];
    A(i, 0) = -g.d * std::cos(phi);
    A(i, 1) = -g.d * std::sin(phi);
    A(i, 2) = 1.0;
    b(i) = delta_l[static_cast<std::size_t>(i)];
  }
  const Eigen::Vector3d x = A.colPivHouseholderQr().solve(b);
  out.pose.beta = std::hypot(x(0), x(1));
  out.pose.alpha = out.pose.beta > 0.0 ? std::atan2(x(1), x(0)) : 0.0;
  canonicalize(out.pose);
  out.pose.tip = cc_tip(out.pose.alpha, out.pose.beta, g);
  return out;
}

Eigen::Matrix3d cc_jacobian(const Triple& delta_l, const CCGeometry& g) {
  // Central differences; the map is smooth away from beta = 0 and the
  // differences straddle the origin symmetrically there.
  const double h = 1e-6 * std::max(1.0, g.d);
  Eigen::Matrix3d J;
  for (std::size_t j = 0; j < 3; ++j) {
    Triple lo = delta_l, hi = delta_l;
    lo[j] -= h;
    hi[j] += h;
    const Vec3 a = fk_constant_curvature(lo, g).pose.tip;
    const Vec3 b = fk_constant_curvature(hi, g).pose.tip;
    J.col(static_cast<Eigen::Index>(j)) = (b - a) / (2.0 * h);
  }
  return J;
}

PoseConfig cc_pose_for_tip(const Vec3& target, const CCGeometry& g) {
  PoseConfig pose;
  const double rho = std::hypot(target.x(), target.y());
  pose.alpha = rho > 0.0 ? std::atan2(target.y(), target.x()) : 0.0;
  // Golden-section search on beta for the closest arc tip.
  auto dist = [&](double b) { return (cc_tip(pose.alpha, b, g) - target).squaredNorm(); };
  double lo = 0.0, hi = g.beta_max;
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = hi - r * (hi - lo), d = lo + r * (hi - lo);
  for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
    if (dist(c) < dist(d)) {
      hi = d;
    } else {
      lo = c;
    }
    c = hi - r * (hi - lo);
    d = lo + r * (hi - lo);
  }
  pose.beta = 0.5 * (lo + hi);
  canonicalize(pose);
  pose.tip = cc_tip(pose.alpha, pose.beta, g);
  return pose;
}

}  // namespace tspine
