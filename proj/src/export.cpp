#include "tspine/export.hpp"

#include <charconv>
#include <sstream>

#include "tspine/error.hpp"

namespace tspine {

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

namespace {

void row(std::ostream& out, std::initializer_list<std::string> cells) {
  bool first = true;
  for (const auto& c : cells) {
    if (!first) out << ',';
    out << c;
    first = false;
  }
  out << '\n';
}

std::string f(double v) { return format_double(v); }

double parse(const std::string& s) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw SchemaError("bad number in CSV: '" + s + "'");
  return v;
}

}  // namespace

TrajectoryRow trajectory_row(const Robot& robot, double t, const ActuationCommand& command,
                             const EquilibriumState& state) {
  TrajectoryRow r;
  r.t = t;
  r.tip = robot.tip_of(state.positions);
  r.delta_l = command.delta_l;
  r.theta = lengths_to_angles(command.delta_l, robot.dyn.materials.winder_radius).theta;
  r.strain = tendon_strain(command.delta_l, robot.tendon_rest_lengths());
  r.stiffness = to_string(command.stiffness);
  r.residual = state.residual;
  return r;
}

void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryRow>& rows) {
  out << "t,tip_x,tip_y,tip_z,dL1,dL2,dL3,theta1,theta2,theta3,eps1,eps2,eps3,stiffness,residual\n";
  for (const auto& r : rows)
    row(out, {f(r.t), f(r.tip.x()), f(r.tip.y()), f(r.tip.z()), f(r.delta_l[0]), f(r.delta_l[1]), f(r.delta_l[2]),
              f(r.theta[0]), f(r.theta[1]), f(r.theta[2]), f(r.strain[0]), f(r.strain[1]), f(r.strain[2]), r.stiffness,
              f(r.residual)});
}

std::vector<TrajectoryRow> read_trajectory_csv(std::istream& in) {
  std::vector<TrajectoryRow> rows;
  std::string line;
  if (!std::getline(in, line)) return rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> c;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) c.push_back(cell);
    if (c.size() != 15) throw SchemaError("trajectory row has " + std::to_string(c.size()) + " columns");
    TrajectoryRow r;
    r.t = parse(c[0]);
    r.tip = {parse(c[1]), parse(c[2]), parse(c[3])};
    for (int i = 0; i < 3; ++i) {
      r.delta_l[i] = parse(c[4 + i]);
      r.theta[i] = parse(c[7 + i]);
      r.strain[i] = parse(c[10 + i]);
    }
    r.stiffness = c[13];
    r.residual = parse(c[14]);
    rows.push_back(r);
  }
  return rows;
}

void write_metrics_csv(std::ostream& out, const std::vector<WorkspaceMetrics>& metrics) {
  out << "stiffness,D,R,theta_max,samples,converged,valid\n";
  for (const auto& m : metrics)
    row(out, {m.stiffness, f(m.accessible_distance), f(m.working_radius), f(m.reach_angle), std::to_string(m.samples),
              std::to_string(m.converged), m.valid ? "1" : "0"});
}

void write_strain_map_csv(std::ostream& out, const std::vector<ConfigurationSample>& samples) {
  out << "alpha,beta,dL1,dL2,dL3,eps1,eps2,eps3,tip_x,tip_y,tip_z,converged\n";
  for (const auto& s : samples)
    row(out, {f(s.alpha), f(s.beta), f(s.delta_l[0]), f(s.delta_l[1]), f(s.delta_l[2]), f(s.strains[0]),
              f(s.strains[1]), f(s.strains[2]), f(s.tip.x()), f(s.tip.y()), f(s.tip.z()), s.converged ? "1" : "0"});
}

void write_obj(std::ostream& out, const StructureModel& model, const std::vector<Vec3>& positions) {
  if (positions.size() != model.nodes.size()) throw ParameterError("positions", "position count does not match nodes");
  for (std::size_t i = 0; i < positions.size(); ++i)
    out << "v " << f(positions[i].x()) << ' ' << f(positions[i].y()) << ' ' << f(positions[i].z()) << '\n';
  for (bool cables : {true, false}) {
    out << "o " << (cables ? "cables" : "struts") << '\n';
    for (const auto& m : model.members)
      if (is_cable(m.kind) == cables)
        out << "l " << model.index_of(m.a) + 1 << ' ' << model.index_of(m.b) + 1 << '\n';
  }
}

}  // namespace tspine
