#include "tspine/model_io.hpp"

#include <fstream>
#include <sstream>

#include "tspine/error.hpp"

namespace tspine {

using nlohmann::json;

namespace {

// Wraps a parse step so library type errors surface as SchemaError.
template <typename F>
auto schema(const std::string& where, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw SchemaError(where + ": " + e.what());
  }
}

const json& field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object()) throw SchemaError(where + " must be an object");
  const auto it = j.find(key);
  if (it == j.end()) throw SchemaError(where + " is missing '" + key + "'");
  return *it;
}

double number(const json& j, const char* key, const std::string& where) {
  const json& v = field(j, key, where);
  if (!v.is_number()) throw SchemaError(where + "." + key + " must be a number");
  return v.get<double>();
}

std::string text(const json& j, const char* key, const std::string& where) {
  const json& v = field(j, key, where);
  if (!v.is_string()) throw SchemaError(where + "." + key + " must be a string");
  return v.get<std::string>();
}

const json& array(const json& j, const char* key, const std::string& where) {
  const json& v = field(j, key, where);
  if (!v.is_array()) throw SchemaError(where + "." + key + " must be an array");
  return v;
}

std::vector<double> numbers(const json& j, const std::string& where) {
  if (!j.is_array()) throw SchemaError(where + " must be an array");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw SchemaError(where + " must contain numbers only");
    out.push_back(v.get<double>());
  }
  return out;
}

NodeId node_ref(const json& j, const StructureModel& model, const std::string& where) {
  if (!j.is_string()) throw SchemaError(where + " must be a node label");
  const auto id = parse_node_label(j.get<std::string>());
  if (!id) throw SchemaError(where + ": malformed node label '" + j.get<std::string>() + "'");
  if (model.index_of(*id) < 0) throw DanglingReferenceError(where + " references unknown node " + j.get<std::string>());
  return *id;
}

json state_json(const EquilibriumState& s) {
  json pos = json::array();
  for (const auto& p : s.positions) pos.push_back(to_json(p));
  return {{"positions", pos},
          {"member_forces", s.member_forces},
          {"prestress_scale", s.prestress_scale},
          {"residual", s.residual}};
}

EquilibriumState state_from(const json& j, const StructureModel& model, const std::string& where) {
  EquilibriumState s;
  const json& pos = array(j, "positions", where);
  for (const auto& p : pos) s.positions.push_back(vec3_from_json(p));
  s.member_forces = numbers(field(j, "member_forces", where), where + ".member_forces");
  s.prestress_scale = number(j, "prestress_scale", where);
  s.residual = number(j, "residual", where);
  if (s.positions.size() != model.nodes.size())
    throw SchemaError(where + " has " + std::to_string(s.positions.size()) + " positions for " +
                      std::to_string(model.nodes.size()) + " nodes");
  if (s.member_forces.size() != model.members.size())
    throw SchemaError(where + " has " + std::to_string(s.member_forces.size()) + " member forces for " +
                      std::to_string(model.members.size()) + " members");
  return s;
}

json materials_json(const Materials& m) {
  return {{"cable_material", m.cable_material},
          {"cable_stiffness", m.cable_stiffness},
          {"strut_material", m.strut_material},
          {"strut_stiffness_ratio", m.strut_stiffness_ratio},
          {"spine_material", m.spine_material},
          {"tendon_material", m.tendon_material},
          {"tendon_stiffness", m.tendon_stiffness},
          {"node_mass", m.node_mass},
          {"winder_radius", m.winder_radius},
          {"tendon_pitch", m.tendon_pitch},
          {"stroke_limit", m.stroke_limit},
          {"max_tension", m.max_tension},
          {"gravity", m.gravity},
          {"stiffness_high", m.stiffness.high},
          {"stiffness_low", m.stiffness.low}};
}

Materials materials_from(const json& j) {
  const std::string w = "materials";
  Materials m;
  m.cable_material = text(j, "cable_material", w);
  m.cable_stiffness = number(j, "cable_stiffness", w);
  m.strut_material = text(j, "strut_material", w);
  m.strut_stiffness_ratio = number(j, "strut_stiffness_ratio", w);
  m.spine_material = text(j, "spine_material", w);
  m.tendon_material = text(j, "tendon_material", w);
  m.tendon_stiffness = number(j, "tendon_stiffness", w);
  m.node_mass = number(j, "node_mass", w);
  m.winder_radius = number(j, "winder_radius", w);
  m.tendon_pitch = number(j, "tendon_pitch", w);
  m.stroke_limit = number(j, "stroke_limit", w);
  m.max_tension = number(j, "max_tension", w);
  m.gravity = number(j, "gravity", w);
  m.stiffness.high = number(j, "stiffness_high", w);
  m.stiffness.low = number(j, "stiffness_low", w);
  for (double v : {m.cable_stiffness, m.strut_stiffness_ratio, m.tendon_stiffness, m.node_mass, m.winder_radius,
                   m.stroke_limit, m.stiffness.high, m.stiffness.low})
    if (!(v > 0.0)) throw SchemaError("materials: stiffnesses, mass, radius, stroke and levels must be positive");
  return m;
}

}  // namespace

json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from_json(const json& j) {
  const auto v = numbers(j, "vector");
  if (v.size() != 3) throw SchemaError("vector must have 3 components");
  return {v[0], v[1], v[2]};
}

json to_json(const EquilibriumState& s) { return state_json(s); }

json to_json(const ActuationCommand& c) {
  json st;
  if (c.stiffness.level == StiffnessLevel::Explicit) {
    st = c.stiffness.scale;
  } else {
    st = to_string(c.stiffness);
  }
  return {{"delta_l", c.delta_l}, {"stiffness", st}};
}

Stiffness stiffness_from_json(const json& j) {
  if (j.is_number()) {
    const double v = j.get<double>();
    if (!(v > 0.0) || !std::isfinite(v)) throw SchemaError("stiffness scale must be positive");
    return Stiffness::explicit_scale(v);
  }
  if (j.is_string()) {
    const auto s = parse_stiffness(j.get<std::string>());
    if (s) return *s;
  }
  throw SchemaError("stiffness must be \"high\", \"low\" or a positive number");
}

ActuationCommand command_from_json(const json& j) {
  ActuationCommand c;
  if (!j.is_object()) throw SchemaError("command must be an object");
  if (j.contains("delta_l")) {
    const auto v = numbers(j["delta_l"], "delta_l");
    if (v.size() != 3) throw SchemaError("delta_l must have 3 entries");
    c.delta_l = {v[0], v[1], v[2]};
  }
  if (j.contains("stiffness")) c.stiffness = stiffness_from_json(j["stiffness"]);
  return c;
}

json to_json(const Environment& env) {
  json walls = json::array(), spheres = json::array(), boxes = json::array();
  for (const auto& w : env.walls)
    walls.push_back({{"point", to_json(w.point)}, {"normal", to_json(w.normal)}, {"thermal", w.thermal}});
  for (const auto& s : env.spheres)
    spheres.push_back({{"center", to_json(s.center)}, {"radius", s.radius}, {"thermal", s.thermal}});
  for (const auto& b : env.boxes)
    boxes.push_back({{"lo", to_json(b.lo)}, {"hi", to_json(b.hi)}, {"thermal", b.thermal}});
  return {{"walls", walls}, {"spheres", spheres}, {"boxes", boxes}, {"max_range", env.max_range}};
}

Environment environment_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("environment must be an object");
  Environment env;
  auto thermal = [](const json& o) { return o.contains("thermal") ? number(o, "thermal", "obstacle") : 0.0; };
  if (j.contains("walls"))
    for (const auto& w : array(j, "walls", "environment"))
      env.walls.push_back({vec3_from_json(field(w, "point", "wall")), vec3_from_json(field(w, "normal", "wall")), thermal(w)});
  if (j.contains("spheres"))
    for (const auto& s : array(j, "spheres", "environment")) {
      Sphere sp{vec3_from_json(field(s, "center", "sphere")), number(s, "radius", "sphere"), thermal(s)};
      if (!(sp.radius > 0.0)) throw SchemaError("sphere radius must be positive");
      env.spheres.push_back(sp);
    }
  if (j.contains("boxes"))
    for (const auto& b : array(j, "boxes", "environment"))
      env.boxes.push_back({vec3_from_json(field(b, "lo", "box")), vec3_from_json(field(b, "hi", "box")), thermal(b)});
  if (j.contains("max_range")) env.max_range = number(j, "max_range", "environment");
  for (const auto& w : env.walls)
    if (w.normal.norm() == 0.0) throw SchemaError("wall normal must be non-zero");
  return env;
}

json to_json(const SensorReading& r) {
  return {{"hit", r.hit}, {"distance", r.hit ? json(r.distance) : json(nullptr)}, {"thermal", r.thermal}, {"t", r.t}};
}

json to_json(const WorkspaceMetrics& m) {
  return {{"stiffness", m.stiffness},         {"D", m.accessible_distance}, {"R", m.working_radius},
          {"theta_max", m.reach_angle},       {"samples", m.samples},       {"converged", m.converged},
          {"valid", m.valid}};
}

json to_json(const ConfigurationMap& map) {
  json cells = json::array();
  for (const auto& [key, cell] : map.cells) {
    json ev = json::array();
    for (const auto& r : cell.evidence) ev.push_back({{"log", r.log}, {"entry", r.entry}, {"t", r.t}});
    cells.push_back({{"cell", key}, {"class", to_string(cell.cls)}, {"evidence", ev}});
  }
  return {{"cell_size", map.cell_size}, {"cells", cells}};
}

Robot ModelFile::robot() const {
  if (!form_found()) throw SchemaError("model file has not been form-found (missing force densities, rest state or geometry)");
  Robot r;
  r.dyn.model = model;
  r.dyn.materials = materials;
  r.dyn.anchors = anchors;
  r.dyn.tendons = tendons;
  r.dyn.degradation = degradation;
  r.q = *q;
  r.rest = *rest;
  r.geometry = *geometry;
  return r;
}

ModelFile ModelFile::from_robot(const Robot& robot, std::optional<EquilibriumState> state) {
  ModelFile f;
  f.model = robot.dyn.model;
  f.materials = robot.dyn.materials;
  f.q = robot.q;
  f.anchors = robot.dyn.anchors;
  f.tendons = robot.dyn.tendons;
  f.degradation = robot.dyn.degradation;
  f.geometry = robot.geometry;
  f.rest = robot.rest;
  f.state = std::move(state);
  return f;
}

ModelFile ModelFile::from_topology(const StructureModel& model, const Materials& materials) {
  ModelFile f;
  f.model = model;
  f.materials = materials;
  return f;
}

json to_json(const ModelFile& f) {
  const auto& p = f.model.params;
  json nodes = json::array();
  for (std::size_t i = 0; i < f.model.nodes.size(); ++i)
    nodes.push_back({{"id", node_label(f.model.nodes[i])}, {"seed", to_json(f.model.seed[i])}});
  json members = json::array();
  for (const auto& m : f.model.members)
    members.push_back({{"kind", to_string(m.kind)}, {"a", node_label(m.a)}, {"b", node_label(m.b)}, {"rest_length", m.rest_length}});
  json j = {{"format_version", kFormatVersion},
            {"topology",
             {{"n", p.n}, {"m", p.m}, {"unit_height", p.unit_height}, {"base_radius", p.base_radius}, {"twist", p.twist}}},
            {"nodes", nodes},
            {"members", members},
            {"materials", materials_json(f.materials)}};
  json wraps = json::object();
  for (const auto& [id, w] : f.degradation.wrap_angles) wraps[node_label(id)] = w;
  j["degradation"] = {{"elapsed", f.degradation.elapsed},
                      {"decay_rate", f.degradation.decay_rate},
                      {"friction_mu", f.degradation.friction_mu},
                      {"wrap_angles", wraps}};
  if (f.q) j["force_densities"] = f.q->q;
  json anchors = json::array();
  for (const auto& a : f.anchors) anchors.push_back(node_label(a));
  j["anchors"] = anchors;
  json tendons = json::array();
  for (const auto& t : f.tendons) {
    json route = json::array();
    for (const auto& id : t.route) route.push_back(node_label(id));
    tendons.push_back({{"azimuth", t.azimuth}, {"route", route}, {"rest_length", t.rest_length}});
  }
  j["tendons"] = tendons;
  if (f.geometry)
    j["geometry"] = {{"d", f.geometry->d}, {"s", f.geometry->s}, {"beta_max", f.geometry->beta_max}, {"azimuth", f.geometry->azimuth}};
  if (f.rest) j["rest_state"] = state_json(*f.rest);
  if (f.state) j["state"] = state_json(*f.state);
  return j;
}

ModelFile model_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("model file must be a JSON object");
  if (!j.contains("format_version")) throw VersionError("model file has no format_version");
  if (!j["format_version"].is_number_integer() || j["format_version"].get<long>() != kFormatVersion)
    throw VersionError("unsupported format_version " + j["format_version"].dump() + " (expected " +
                       std::to_string(kFormatVersion) + ")");
  return schema("model file", [&] {
    ModelFile f;
    const json& t = field(j, "topology", "model file");
    auto& p = f.model.params;
    const json& n = field(t, "n", "topology");
    const json& m = field(t, "m", "topology");
    if (!n.is_number_integer() || !m.is_number_integer()) throw SchemaError("topology.n and topology.m must be integers");
    p.n = n.get<int>();
    p.m = m.get<int>();
    p.unit_height = number(t, "unit_height", "topology");
    p.base_radius = number(t, "base_radius", "topology");
    p.twist = number(t, "twist", "topology");
    try {
      check_params(p);
    } catch (const ParameterError& e) {
      throw SchemaError(std::string("topology: ") + e.what());
    }

    for (const auto& node : array(j, "nodes", "model file")) {
      const std::string label = text(node, "id", "node");
      const auto id = parse_node_label(label);
      if (!id) throw SchemaError("malformed node label '" + label + "'");
      f.model.nodes.push_back(*id);
      f.model.seed.push_back(vec3_from_json(field(node, "seed", "node " + label)));
    }
    f.model.reindex();
    for (const auto& mem : array(j, "members", "model file")) {
      Member mm;
      const auto kind = parse_member_kind(text(mem, "kind", "member"));
      if (!kind) throw SchemaError("unknown member kind '" + mem["kind"].get<std::string>() + "'");
      mm.kind = *kind;
      mm.a = node_ref(field(mem, "a", "member"), f.model, "member endpoint");
      mm.b = node_ref(field(mem, "b", "member"), f.model, "member endpoint");
      mm.rest_length = number(mem, "rest_length", "member");
      f.model.members.push_back(mm);
    }
    const auto report = validate_topology(f.model);
    for (const auto& issue : report.issues)
      if (issue.code == "count") throw CountViolationError(issue.message);
    if (!report.ok()) throw SchemaError("topology invalid: " + report.issues.front().message);

    f.materials = materials_from(field(j, "materials", "model file"));
    if (j.contains("degradation")) {
      const json& d = j["degradation"];
      f.degradation.elapsed = number(d, "elapsed", "degradation");
      f.degradation.decay_rate = number(d, "decay_rate", "degradation");
      f.degradation.friction_mu = number(d, "friction_mu", "degradation");
      if (d.contains("wrap_angles")) {
        if (!d["wrap_angles"].is_object()) throw SchemaError("degradation.wrap_angles must be an object");
        for (const auto& [label, w] : d["wrap_angles"].items()) {
          if (!w.is_number()) throw SchemaError("wrap angle must be a number");
          f.degradation.wrap_angles[node_ref(json(label), f.model, "wrap angle")] = w.get<double>();
        }
      }
      try {
        check_degradation(f.degradation);
      } catch (const ParameterError& e) {
        throw SchemaError(std::string("degradation: ") + e.what());
      }
    }
    if (j.contains("force_densities")) {
      ForceDensitySet q;
      q.q = numbers(j["force_densities"], "force_densities");
      if (q.q.size() != f.model.members.size())
        throw SchemaError("force_densities has " + std::to_string(q.q.size()) + " entries for " +
                          std::to_string(f.model.members.size()) + " members");
      f.q = q;
    }
    if (j.contains("anchors"))
      for (const auto& a : array(j, "anchors", "model file")) f.anchors.push_back(node_ref(a, f.model, "anchor"));
    if (j.contains("tendons")) {
      const json& ts = array(j, "tendons", "model file");
      if (ts.size() != 3) throw SchemaError("exactly three tendons expected");
      for (std::size_t i = 0; i < 3; ++i) {
        auto& tendon = f.tendons[i];
        tendon.azimuth = number(ts[i], "azimuth", "tendon");
        tendon.rest_length = number(ts[i], "rest_length", "tendon");
        for (const auto& id : array(ts[i], "route", "tendon")) tendon.route.push_back(node_ref(id, f.model, "tendon route"));
      }
    }
    if (j.contains("geometry")) {
      const json& g = j["geometry"];
      CCGeometry geo;
      geo.d = number(g, "d", "geometry");
      geo.s = number(g, "s", "geometry");
      geo.beta_max = number(g, "beta_max", "geometry");
      const auto az = numbers(field(g, "azimuth", "geometry"), "geometry.azimuth");
      if (az.size() != 3) throw SchemaError("geometry.azimuth must have 3 entries");
      geo.azimuth = {az[0], az[1], az[2]};
      f.geometry = geo;
    }
    if (j.contains("rest_state")) f.rest = state_from(j["rest_state"], f.model, "rest_state");
    if (j.contains("state")) f.state = state_from(j["state"], f.model, "state");
    return f;
  });
}

void save_model(const ModelFile& file, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParameterError("path", "cannot write " + path);
  out << to_json(file).dump(1) << '\n';
  if (!out) throw ParameterError("path", "failed writing " + path);
}

ModelFile load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("path", "cannot read " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(path + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace tspine
