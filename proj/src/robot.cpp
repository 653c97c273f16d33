#include "tspine/robot.hpp"

#include <cmath>
#include <numbers>

#include "tspine/error.hpp"
#include "tspine/prestress.hpp"

namespace tspine {

namespace {

std::vector<NodeId> ring_nodes(const StructureModel& model, int lvl) {
  std::vector<NodeId> out;
  for (const auto& id : model.nodes)
    if (level(id) == lvl) out.push_back(id);
  return out;
}

double angle_gap(double a, double b) {
  const double d = std::remainder(a - b, 2.0 * std::numbers::pi);
  return std::abs(d);
}

}  // namespace

Triple Robot::tendon_rest_lengths() const {
  return {dyn.tendons[0].rest_length, dyn.tendons[1].rest_length, dyn.tendons[2].rest_length};
}

Vec3 Robot::base_center() const {
  Vec3 c = Vec3::Zero();
  const auto base = dyn.model.base_ring();
  for (const auto& id : base) c += rest.positions[static_cast<std::size_t>(dyn.model.index_of(id))];
  return c / static_cast<double>(base.size());
}

Vec3 Robot::tip_of(const std::vector<Vec3>& positions) const {
  return tip_position(dyn.model, positions) - base_center();
}

void route_tendons(DynamicsModel& dyn, const std::vector<Vec3>& positions) {
  const auto& model = dyn.model;
  const Vec3 axis_origin = [&] {
    Vec3 c = Vec3::Zero();
    const auto base = model.base_ring();
    for (const auto& id : base) c += positions[static_cast<std::size_t>(model.index_of(id))];
    return Vec3(c / static_cast<double>(base.size()));
  }();
  for (std::size_t t = 0; t < 3; ++t) {
    auto& tendon = dyn.tendons[t];
    tendon.azimuth = 2.0 * std::numbers::pi * static_cast<double>(t) / 3.0;
    tendon.route.clear();
    for (int lvl = 0; lvl < model.params.m; ++lvl) {
      const NodeId* best = nullptr;
      double best_gap = 0.0;
      const auto ring = ring_nodes(model, lvl);
      for (const auto& id : ring) {
        const Vec3 p = positions[static_cast<std::size_t>(model.index_of(id))] - axis_origin;
        const double gap = angle_gap(std::atan2(p.y(), p.x()), tendon.azimuth);
        if (!best || gap < best_gap - 1e-12) {
          best = &id;
          best_gap = gap;
        }
      }
      tendon.route.push_back(*best);
    }
    double length = 0.0;
    for (std::size_t j = 0; j + 1 < tendon.route.size(); ++j)
      length += (positions[static_cast<std::size_t>(model.index_of(tendon.route[j + 1]))] -
                 positions[static_cast<std::size_t>(model.index_of(tendon.route[j]))])
                    .norm();
    tendon.rest_length = length;
  }
}

CCGeometry derive_geometry(const DynamicsModel& dyn, const std::vector<Vec3>& positions) {
  const auto& model = dyn.model;
  Vec3 base = Vec3::Zero();
  const auto base_ring = model.base_ring();
  for (const auto& id : base_ring) base += positions[static_cast<std::size_t>(model.index_of(id))];
  base /= static_cast<double>(base_ring.size());

  CCGeometry g;
  double radial = 0.0;
  int count = 0;
  for (std::size_t t = 0; t < 3; ++t) {
    g.azimuth[t] = dyn.tendons[t].azimuth;
    for (const auto& id : dyn.tendons[t].route) {
      const Vec3 p = positions[static_cast<std::size_t>(model.index_of(id))] - base;
      radial += std::hypot(p.x(), p.y());
      ++count;
    }
  }
  g.d = dyn.materials.tendon_pitch > 0.0 ? dyn.materials.tendon_pitch : radial / std::max(count, 1);
  g.s = (tip_position(model, positions) - base).z();
  g.beta_max = dyn.materials.stroke_limit / g.d;
  return g;
}

void check_command(const ActuationCommand& command, const Materials& materials) {
  for (std::size_t i = 0; i < 3; ++i) {
    const double v = command.delta_l[i];
    if (!std::isfinite(v) || std::abs(v) > materials.stroke_limit * (1.0 + 1e-12))
      throw ParameterError("stroke", "tendon " + std::to_string(i + 1) + " command " + std::to_string(v) +
                                         " exceeds the stroke limit " + std::to_string(materials.stroke_limit));
  }
  const double s = materials.stiffness.resolve(command.stiffness);
  if (!(s > 0.0) || !std::isfinite(s)) throw ParameterError("prestress_scale", "prestress scale must be positive");
}

PoseConfig measure_pose(const Robot& robot, const std::vector<Vec3>& positions) {
  PoseConfig pose;
  pose.tip = robot.tip_of(positions);
  const Vec3 n = tip_normal(robot.dyn.model, positions);
  pose.beta = std::acos(std::clamp(n.z(), -1.0, 1.0));
  pose.alpha = std::atan2(n.y(), n.x());
  canonicalize(pose);
  return pose;
}

namespace {

// Taller or coarser models sometimes need a longer search or a looser pull
// toward the seed shape; the first admissible state wins.
PrestressResult find_prestress_with_fallback(const StructureModel& model, const PrestressOptions& options) {
  std::vector<PrestressOptions> schedule{options};
  PrestressOptions o = options;
  o.max_iter *= 4;
  schedule.push_back(o);
  o.regularization /= 3.0;
  schedule.push_back(o);
  o.regularization /= 3.0;
  o.min_ratio = std::min(o.min_ratio, 0.1);
  schedule.push_back(o);
  for (std::size_t k = 0;; ++k) {
    try {
      return find_prestress(model, schedule[k]);
    } catch (const DivergenceError&) {
      if (k + 1 == schedule.size()) throw;
    }
  }
}

}  // namespace

Robot form_find(const StructureModel& model, const Materials& materials, const FormFindOptions& options) {
  check_params(model.params);
  const auto report = validate_topology(model);
  if (!report.ok()) throw ParameterError("topology", "model fails validation: " + report.issues.front().message);

  std::vector<NodeId> ends = model.base_ring();
  for (const auto& id : model.top_ring()) ends.push_back(id);

  const PrestressResult pre = find_prestress_with_fallback(model, options.prestress);
  ForceDensitySet q = pre.q;
  const AnchorSet held_ends = AnchorSet::at(model, ends, pre.positions);
  EquilibriumState held;
  Robot robot;
  if (!options.targets.empty()) {
    auto adapted = adapt_force_densities(model, q, held_ends, options.targets, options.adapt);
    q = adapted.q;
    held = adapted.state;
    robot.adapt_converged = adapted.converged;
  } else {
    held = solve_force_density(model, q, held_ends);
  }

  DynamicsModel& dyn = robot.dyn;
  dyn.model = model;
  dyn.materials = materials;
  assign_rest_lengths(dyn.model, materials, held);

  EquilibriumState rest = held;
  if (options.settle) {
    dyn.anchors = model.base_ring();
    ActuationCommand none;
    none.stiffness = Stiffness::explicit_scale(1.0);
    auto relaxed = relax_dynamics(dyn, held, none, options.relax);
    if (!relaxed.converged)
      throw IntegrationError("form-finding: released structure did not settle within " +
                                 std::to_string(options.relax.max_steps) + " steps",
                             relaxed.steps);
    const EquilibriumState settled = relaxed.final_state();
    for (std::size_t e = 0; e < dyn.model.members.size(); ++e) {
      const double f = settled.member_forces[e];
      const bool ok = is_cable(dyn.model.members[e].kind) ? f > 0.0 : f < 0.0;
      if (!ok)
        throw ParameterError("prestress", to_string(dyn.model.members[e].kind) + " " +
                                              node_label(dyn.model.members[e].a) + "--" +
                                              node_label(dyn.model.members[e].b) + " lost its prestress on release");
    }
    // Polish: the settled forces define force densities whose FDM solution
    // with the settled end rings is the settled shape to round-off.
    q = force_densities_of(dyn.model, settled);
    rest = solve_force_density(model, q, AnchorSet::at(model, ends, settled.positions));
    dyn.model.members = model.members;
    assign_rest_lengths(dyn.model, materials, rest);
  } else {
    dyn.anchors = ends;
  }
  rest.prestress_scale = 1.0;
  robot.q = q;
  robot.rest = rest;
  route_tendons(dyn, rest.positions);
  robot.geometry = derive_geometry(dyn, rest.positions);
  return robot;
}

Plant::Plant(Robot robot, RelaxParams params) : robot_(std::move(robot)), params_(params) { reset(); }

void Plant::reset() {
  state_ = robot_.rest;
  command_ = ActuationCommand{};
  converged_ = true;
  last_steps_ = 0;
}

const EquilibriumState& Plant::apply(const ActuationCommand& command) {
  check_command(command, robot_.dyn.materials);
  auto result = relax_dynamics(robot_.dyn, state_, command, params_);
  state_ = result.final_state();
  command_ = command;
  converged_ = result.converged;
  last_steps_ = result.steps;
  return state_;
}

}  // namespace tspine
