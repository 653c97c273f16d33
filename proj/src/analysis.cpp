#include "tspine/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "tspine/error.hpp"

namespace tspine {

std::vector<Triple> lattice_grid(double stroke, int per_axis) {
  if (!(stroke >= 0.0)) throw ParameterError("stroke", "stroke must be non-negative");
  if (per_axis < 1) throw ParameterError("grid", "grid needs at least one value per axis");
  std::vector<double> v;
  for (int k = 0; k < per_axis; ++k) v.push_back(per_axis == 1 ? 0.0 : -stroke * (per_axis - 1 - k) / (per_axis - 1));
  std::vector<Triple> out;
  for (double a : v)
    for (double b : v)
      for (double c : v) out.push_back({a, b, c});
  return out;
}

WorkspaceMetrics sweep_workspace(const Robot& robot, const Stiffness& stiffness, const std::vector<Triple>& grid,
                                 const RelaxParams& params) {
  if (grid.empty()) throw ParameterError("grid", "workspace grid is empty");
  WorkspaceMetrics m;
  m.stiffness = to_string(stiffness);
  m.samples = static_cast<int>(grid.size());
  const Vec3 rest_tip = robot.tip_of(robot.rest.positions);
  const Vec3 axis = tip_normal(robot.dyn.model, robot.rest.positions);
  std::ostringstream failures;
  for (const auto& dl : grid) {
    ActuationCommand cmd;
    cmd.delta_l = dl;
    cmd.stiffness = stiffness;
    check_command(cmd, robot.dyn.materials);
    RelaxResult r;
    try {
      r = relax_dynamics(robot.dyn, robot.rest, cmd, params);
    } catch (const IntegrationError& e) {
      failures << " (" << dl[0] << "," << dl[1] << "," << dl[2] << "): " << e.what() << ";";
      continue;
    }
    if (!r.converged) {
      failures << " (" << dl[0] << "," << dl[1] << "," << dl[2] << "): no convergence in " << r.steps << " steps;";
      continue;
    }
    ++m.converged;
    const auto& x = r.final_state().positions;
    const Vec3 tip = robot.tip_of(x);
    m.accessible_distance = std::max(m.accessible_distance, std::abs(tip.z() - rest_tip.z()));
    m.working_radius = std::max(m.working_radius, std::hypot(tip.x(), tip.y()));
    const double tilt = std::acos(std::clamp(tip_normal(robot.dyn.model, x).dot(axis), -1.0, 1.0));
    m.reach_angle = std::max(m.reach_angle, tilt);
  }
  if (m.converged == 0) throw SweepError("no sample converged:" + failures.str());
  m.valid = m.converged >= 0.9 * m.samples;
  return m;
}

std::vector<double> default_alphas() {
  std::vector<double> out;
  for (int k = 0; k < 13; ++k) out.push_back(2.0 * std::numbers::pi * k / 13.0);
  return out;
}

std::vector<double> default_betas(const CCGeometry& g) {
  std::vector<double> out;
  for (int j = 0; j < 7; ++j) out.push_back(g.beta_max * j / 6.0);
  return out;
}

std::vector<ConfigurationSample> strain_map(const Robot& robot, const std::vector<double>& alphas,
                                            const std::vector<double>& betas, const Stiffness& stiffness,
                                            const RelaxParams& params) {
  const Triple rest = robot.tendon_rest_lengths();
  std::vector<ConfigurationSample> out;
  for (double a : alphas)
    for (double b : betas) {
      ConfigurationSample s;
      PoseConfig pose{a, b, Vec3::Zero()};
      canonicalize(pose);
      s.alpha = pose.alpha;
      s.beta = pose.beta;
      const ActuationCommand cmd = ik_constant_curvature(a, b, robot.geometry, stiffness);
      s.delta_l = cmd.delta_l;
      s.strains = tendon_strain(cmd.delta_l, rest);
      try {
        const auto r = relax_dynamics(robot.dyn, robot.rest, cmd, params);
        s.converged = r.converged;
        s.tip = robot.tip_of(r.final_state().positions);
      } catch (const IntegrationError&) {
        s.converged = false;
      }
      out.push_back(s);
    }
  std::stable_sort(out.begin(), out.end(), [](const ConfigurationSample& x, const ConfigurationSample& y) {
    return std::tie(x.alpha, x.beta) < std::tie(y.alpha, y.beta);
  });
  return out;
}

void check_log(const ExplorationLog& log) {
  for (std::size_t k = 1; k < log.entries.size(); ++k)
    if (!(log.entries[k].t > log.entries[k - 1].t)) {
      std::ostringstream os;
      os << "timestamps not strictly increasing at entry " << k << " (" << log.entries[k - 1].t << " then "
         << log.entries[k].t << ")";
      throw LogIntegrityError(os.str());
    }
}

std::string to_string(CellClass c) {
  switch (c) {
    case CellClass::Unknown: return "unknown";
    case CellClass::Manipulatable: return "manipulatable";
    case CellClass::Unstructured: return "unstructured";
  }
  return "unknown";
}

CellKey ConfigurationMap::key_of(const Vec3& p) const {
  return {static_cast<int>(std::floor(p.x() / cell_size)), static_cast<int>(std::floor(p.y() / cell_size)),
          static_cast<int>(std::floor(p.z() / cell_size))};
}

CellClass ConfigurationMap::at(const Vec3& p) const {
  const auto it = cells.find(key_of(p));
  return it == cells.end() ? CellClass::Unknown : it->second.cls;
}

ConfigurationMap build_configuration_map(const std::vector<ExplorationLog>& logs, double cell_size,
                                         double safety_distance) {
  if (logs.empty()) throw ParameterError("logs", "no exploration log given");
  if (!(cell_size > 0.0)) throw ParameterError("cell_size", "cell size must be positive");
  ConfigurationMap map;
  map.cell_size = cell_size;
  for (std::size_t l = 0; l < logs.size(); ++l) {
    check_log(logs[l]);
    for (std::size_t k = 0; k < logs[l].entries.size(); ++k) {
      const auto& e = logs[l].entries[k];
      Cell& cell = map.cells[map.key_of(e.pose.tip)];
      cell.evidence.push_back({l, k, e.t});
      const bool blocked = !e.converged || (e.sensor.hit && e.sensor.distance < safety_distance);
      if (blocked) {
        cell.cls = CellClass::Unstructured;
      } else if (cell.cls == CellClass::Unknown) {
        cell.cls = CellClass::Manipulatable;
      }
    }
  }
  // Evidence order must not depend on how logs were split or ordered.
  for (auto& [key, cell] : map.cells)
    std::sort(cell.evidence.begin(), cell.evidence.end(),
              [](const EntryRef& a, const EntryRef& b) { return std::tie(a.t, a.log, a.entry) < std::tie(b.t, b.log, b.entry); });
  return map;
}

ExplorationLog explore(const Robot& robot, const Environment& env, const std::vector<std::pair<double, double>>& poses,
                       const ExploreOptions& options) {
  if (!(options.dt > 0.0)) throw ParameterError("dt", "exploration time step must be positive");
  Plant plant(robot, options.relax);
  ExplorationLog log;
  bool hold = false;
  for (std::size_t k = 0; k < poses.size(); ++k) {
    ExplorationEntry e;
    e.t = options.dt * static_cast<double>(k);
    const auto [alpha, beta] = poses[k];
    ActuationCommand cmd;
    if (hold) {
      cmd = plant.command();
      cmd.stiffness = Stiffness::low();
    } else {
      cmd = ik_constant_curvature(alpha, beta, robot.geometry, options.stiffness);
    }
    try {
      plant.apply(cmd);
      e.converged = plant.converged();
    } catch (const IntegrationError&) {
      e.converged = false;
    }
    e.command = cmd;
    e.pose = plant.pose();
    e.sensor = sense_infrared(env, e.pose, tip_normal(robot.dyn.model, plant.state().positions), e.t);
    e.distance_to_trajectory = (cc_tip(alpha, beta, robot.geometry) - e.pose.tip).norm();
    hold = e.sensor.hit && e.sensor.distance < options.safety_distance;
    log.entries.push_back(e);
  }
  return log;
}

}  // namespace tspine
