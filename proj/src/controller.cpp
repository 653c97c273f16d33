#include "tspine/controller.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "tspine/error.hpp"

namespace tspine {

void check_controller(const ControllerState& ctl) {
  const auto& c = ctl.config;
  if (!(c.gain > 0.0)) throw ParameterError("gain", "controller gain must be positive");
  if (!(c.waypoint_tol > 0.0)) throw ParameterError("waypoint_tol", "waypoint tolerance must be positive");
  if (c.max_steps_per_waypoint < 1) throw ParameterError("max_steps_per_waypoint", "need at least one step per waypoint");
  if (!(c.safety_distance >= 0.0)) throw ParameterError("safety_distance", "safety distance must be non-negative");
  if (!(c.stroke_limit > 0.0)) throw ParameterError("stroke", "stroke limit must be positive");
  if (!(c.damping >= 0.0)) throw ParameterError("damping", "damping must be non-negative");
  if (!(c.max_step > 0.0)) throw ParameterError("max_step", "step limit must be positive");
}

namespace {

Triple clamp_stroke(Triple dl, const ControllerConfig& cfg) {
  for (auto& v : dl) v = std::clamp(v, -cfg.stroke_limit, cfg.pull_only ? 0.0 : cfg.stroke_limit);
  return dl;
}

}  // namespace

Eigen::Matrix3d model_jacobian(const Triple& delta_l, const CCGeometry& g) {
  Eigen::Matrix3d J = cc_jacobian(delta_l, g);
  const PoseConfig pose = fk_constant_curvature(delta_l, g).pose;
  const Vec3 tangent(std::sin(pose.beta) * std::cos(pose.alpha), std::sin(pose.beta) * std::sin(pose.alpha),
                     std::cos(pose.beta));
  J += tangent * Eigen::RowVector3d::Constant(1.0 / 3.0);
  return J;
}

ActuationCommand initial_command(const ControllerState& ctl) {
  ActuationCommand cmd = ctl.command;
  cmd.stiffness = ctl.config.stiffness;
  if (ctl.done() || !ctl.config.feedforward) return cmd;
  const PoseConfig pose = cc_pose_for_tip(ctl.waypoints[ctl.current], ctl.geometry);
  Triple dl = ik_constant_curvature(pose.alpha, std::min(pose.beta, ctl.geometry.beta_max), ctl.geometry).delta_l;
  if (ctl.config.pull_only) {
    // Same bend with every tendon pulling: drop the common mode so the
    // longest command is zero.
    const double top = std::max({dl[0], dl[1], dl[2]});
    for (auto& v : dl) v -= top;
  }
  cmd.delta_l = clamp_stroke(dl, ctl.config);
  return cmd;
}

std::pair<ActuationCommand, ControllerState> step_closed_loop(ControllerState ctl, const PoseConfig& achieved,
                                                              const SensorReading& sensor) {
  check_controller(ctl);
  if (ctl.done()) throw ParameterError("target", "controller has no remaining waypoint");
  const auto& cfg = ctl.config;

  ControllerRecord rec;
  rec.achieved = achieved;
  rec.waypoint = ctl.current;
  rec.error = ctl.waypoints[ctl.current] - achieved.tip;
  rec.error_norm = rec.error.norm();
  rec.tracked = cfg.thermal_target && sensor.hit && std::abs(sensor.thermal - *cfg.thermal_target) < cfg.thermal_tol;

  ActuationCommand cmd = ctl.command;
  if (!ctl.has_jacobian) {
    ctl.jacobian = model_jacobian(cmd.delta_l, ctl.geometry);
    ctl.has_jacobian = true;
  }
  if (cfg.learn && ctl.has_last) {
    // Broyden rank-one update from the last observed move.
    Eigen::Vector3d dq;
    for (std::size_t i = 0; i < 3; ++i) dq(static_cast<Eigen::Index>(i)) = cmd.delta_l[i] - ctl.last_delta_l[i];
    const double n2 = dq.squaredNorm();
    if (n2 > 1e-12) ctl.jacobian += (achieved.tip - ctl.last_tip - ctl.jacobian * dq) * dq.transpose() / n2;
  }
  ctl.last_delta_l = cmd.delta_l;
  ctl.last_tip = achieved.tip;
  ctl.has_last = cmd.stiffness == cfg.stiffness;  // a held, softened state is a different plant
  if (sensor.hit && sensor.distance < cfg.safety_distance) {
    // Compliance response: keep the tendons where they are, soften.
    cmd.stiffness = Stiffness::low();
    rec.safety_hold = true;
  } else if (!ctl.history.empty() && ctl.history.back().safety_hold && !(cmd.stiffness == cfg.stiffness)) {
    cmd.stiffness = cfg.stiffness;
    rec.resumed = true;
  } else if (rec.error_norm < cfg.waypoint_tol || ctl.steps_on_waypoint >= cfg.max_steps_per_waypoint) {
    rec.advanced = rec.error_norm < cfg.waypoint_tol;
    rec.gave_up = !rec.advanced;
    ++ctl.current;
    ctl.steps_on_waypoint = 0;
    cmd.stiffness = cfg.stiffness;
    if (!ctl.done() && cfg.feedforward) {
      ctl.command = cmd;
      cmd = initial_command(ctl);
    }
  } else {
    const Eigen::Matrix3d& J = ctl.jacobian;
    const double smax = J.jacobiSvd().singularValues()(0);
    const double lambda = cfg.damping * smax;
    Eigen::Vector3d step =
        cfg.gain * J.transpose() * (J * J.transpose() + lambda * lambda * Eigen::Matrix3d::Identity()).ldlt().solve(rec.error);
    const double big = step.cwiseAbs().maxCoeff();
    if (big > cfg.max_step) step *= cfg.max_step / big;
    for (std::size_t i = 0; i < 3; ++i) cmd.delta_l[i] += step(static_cast<Eigen::Index>(i));
    cmd.delta_l = clamp_stroke(cmd.delta_l, cfg);
    cmd.stiffness = cfg.stiffness;
    ++ctl.steps_on_waypoint;
  }
  rec.command = cmd;
  ctl.command = cmd;
  ctl.history.push_back(rec);
  return {cmd, std::move(ctl)};
}

}  // namespace tspine
