#include "tspine/session.hpp"

#include <cmath>

#include "tspine/error.hpp"
#include "tspine/model_io.hpp"

namespace tspine {

using nlohmann::json;

namespace {

const char* kInboundKinds[] = {"command", "sensor", "metrics"};
const char* kOutboundKinds[] = {"state_update", "error"};

bool one_of(const std::string& s, const auto& list) {
  for (const char* k : list)
    if (s == k) return true;
  return false;
}

}  // namespace

void check_command_payload(const json& p, const Robot& robot) {
  if (!p.is_object()) throw SchemaError("command payload must be an object");
  static const char* known[] = {"delta_l", "stiffness", "target", "waypoints", "environment", "reset", "stop"};
  for (const auto& [key, _] : p.items())
    if (!one_of(key, known)) throw SchemaError("unknown command field '" + key + "'");
  if (p.empty()) throw SchemaError("empty command");
  if (p.contains("target") && p.contains("waypoints")) throw SchemaError("give either target or waypoints");
  if (p.contains("delta_l") && (p.contains("target") || p.contains("waypoints")))
    throw SchemaError("delta_l and a target are mutually exclusive");
  const ActuationCommand c = command_from_json(p);
  check_command(c, robot.dyn.materials);
  if (p.contains("target")) vec3_from_json(p["target"]);
  if (p.contains("waypoints")) {
    if (!p["waypoints"].is_array() || p["waypoints"].empty()) throw SchemaError("waypoints must be a non-empty array");
    for (const auto& w : p["waypoints"]) vec3_from_json(w);
  }
  if (p.contains("environment")) environment_from_json(p["environment"]);
  for (const char* flag : {"reset", "stop"})
    if (p.contains(flag) && !p[flag].is_boolean()) throw SchemaError(std::string(flag) + " must be a boolean");
}

SessionCore::SessionCore(Robot robot, SessionOptions options)
    : robot_(std::move(robot)),
      options_(std::move(options)),
      initial_environment_(options_.environment),
      integrator_(robot_.dyn, robot_.rest, ActuationCommand{}) {
  if (!(options_.tick_hz > 0.0)) throw ParameterError("tick_hz", "tick rate must be positive");
  if (options_.steps_per_tick < 1) throw ParameterError("steps_per_tick", "need at least one step per tick");
  ctl_.config = options_.controller;
  ctl_.geometry = robot_.geometry;
  check_controller(ctl_);
}

int SessionCore::connect() {
  const int id = next_connection_++;
  out_seq_[id] = 0;
  in_seq_[id] = -1;
  if (!writer_) writer_ = id;
  return id;
}

void SessionCore::disconnect(int connection) {
  out_seq_.erase(connection);
  in_seq_.erase(connection);
  if (writer_ && *writer_ == connection) writer_.reset();
}

std::vector<Outbound> SessionCore::reply(int connection, const std::string& kind, json payload) {
  if (!out_seq_.count(connection)) return {};
  return {{connection, {{"kind", kind}, {"seq", ++out_seq_[connection]}, {"payload", std::move(payload)}}}};
}

std::vector<Outbound> SessionCore::error(int connection, const json& echo, const std::string& kind,
                                         const std::string& message) {
  return reply(connection, "error", {{"error", kind}, {"message", message}, {"echo_seq", echo}});
}

std::vector<Outbound> SessionCore::receive(int connection, const std::string& line) {
  if (!out_seq_.count(connection)) throw ParameterError("connection", "unknown connection");
  json msg;
  try {
    msg = json::parse(line);
  } catch (const json::parse_error& e) {
    return error(connection, nullptr, "schema", std::string("malformed JSON: ") + e.what());
  }
  const json echo = msg.is_object() && msg.contains("seq") ? msg["seq"] : json(nullptr);
  if (!msg.is_object() || !msg.contains("kind") || !msg["kind"].is_string())
    return error(connection, echo, "schema", "message must be an object with a string 'kind'");
  const std::string kind = msg["kind"].get<std::string>();
  if (!echo.is_number_integer()) return error(connection, echo, "schema", "message needs an integer 'seq'");
  const long seq = echo.get<long>();
  if (seq <= in_seq_[connection])
    return error(connection, echo, "sequence",
                 "seq must increase (last " + std::to_string(in_seq_[connection]) + ")");
  if (!one_of(kind, kInboundKinds)) {
    const bool known = one_of(kind, kOutboundKinds);
    return error(connection, echo, "schema",
                 known ? "'" + kind + "' is only sent by the service" : "unknown kind '" + kind + "'");
  }
  in_seq_[connection] = seq;
  const json payload = msg.value("payload", json::object());

  if (kind == "metrics") {
    json m = {{"tick", tick_},
              {"t", time()},
              {"steps", integrator_.steps_taken()},
              {"converged", integrator_.converged()},
              {"tip", to_json(tip())},
              {"writer", is_writer(connection)},
              {"pending", pending_.size()},
              {"controller_steps", ctl_.history.size()}};
    return reply(connection, "metrics", std::move(m));
  }
  if (!is_writer(connection)) return error(connection, echo, "read_only", "another operator holds the session");
  try {
    if (kind == "command") {
      check_command_payload(payload, robot_);
    } else {
      if (!payload.is_object()) throw SchemaError("sensor payload must be an object");
      if (payload.contains("distance") && !payload["distance"].is_number() && !payload["distance"].is_null())
        throw SchemaError("distance must be a number or null");
      if (payload.contains("thermal") && !payload["thermal"].is_number()) throw SchemaError("thermal must be a number");
    }
  } catch (const Error& e) {
    return error(connection, echo, e.kind(), e.what());
  }
  json stored = {{"kind", kind}, {"payload", payload}};
  pending_.push_back(stored);
  events_.push_back({tick_, stored});
  return reply(connection, kind, {{"ack", seq}, {"applies_at_tick", tick_ + 1}});
}

void SessionCore::set_command(const ActuationCommand& command) {
  if (!(command == integrator_.command())) integrator_.set_command(command);
}

void SessionCore::apply(const json& msg) {
  const json& p = msg["payload"];
  if (msg["kind"] == "sensor") {
    SensorReading r;
    const bool has_distance = p.contains("distance") && p["distance"].is_number();
    r.hit = has_distance;
    if (has_distance) r.distance = p["distance"].get<double>();
    r.thermal = p.value("thermal", 0.0);
    r.t = time();
    injected_ = r;
    return;
  }
  if (p.value("reset", false)) {
    integrator_ = Integrator(robot_.dyn, robot_.rest, ActuationCommand{});
    active_ = false;
    const ControllerConfig cfg = ctl_.config;
    ctl_ = ControllerState{};
    ctl_.config = cfg;
    ctl_.geometry = robot_.geometry;
  }
  if (p.value("stop", false)) active_ = false;
  if (p.contains("environment")) options_.environment = environment_from_json(p["environment"]);
  ActuationCommand cmd = integrator_.command();
  if (p.contains("delta_l")) {
    cmd.delta_l = command_from_json(p).delta_l;
    active_ = false;
  }
  if (p.contains("stiffness")) {
    cmd.stiffness = stiffness_from_json(p["stiffness"]);
    ctl_.config.stiffness = cmd.stiffness;
  }
  if (p.contains("target") || p.contains("waypoints")) {
    ctl_.waypoints.clear();
    if (p.contains("target")) {
      ctl_.waypoints.push_back(vec3_from_json(p["target"]));
    } else {
      for (const auto& w : p["waypoints"]) ctl_.waypoints.push_back(vec3_from_json(w));
    }
    ctl_.current = 0;
    ctl_.steps_on_waypoint = 0;
    ctl_.command = cmd;
    cmd = initial_command(ctl_);
    active_ = true;
  }
  ctl_.command = cmd;
  set_command(cmd);
}

Vec3 SessionCore::tip() const { return robot_.tip_of(integrator_.positions()); }

std::vector<Outbound> SessionCore::tick() {
  for (const auto& msg : pending_) apply(msg);
  pending_.clear();

  integrator_.advance(options_.steps_per_tick, true);
  ++tick_;

  const auto& x = integrator_.positions();
  const PoseConfig pose = measure_pose(robot_, x);
  if (injected_) {
    sensor_ = *injected_;
    injected_.reset();
  } else {
    sensor_ = sense_infrared(options_.environment, pose, tip_normal(robot_.dyn.model, x), time());
  }

  // Safety first: a sub-threshold reading softens the structure at once,
  // whether or not the controller is tracking.
  hold_ = sensor_.hit && sensor_.distance < ctl_.config.safety_distance;
  if (hold_) {
    ActuationCommand cmd = integrator_.command();
    cmd.stiffness = Stiffness::low();
    set_command(cmd);
    ctl_.command = cmd;
  }
  if (active_ && !ctl_.done() && (integrator_.converged() || hold_)) {
    auto [cmd, next] = step_closed_loop(ctl_, pose, sensor_);
    ctl_ = std::move(next);
    set_command(cmd);
    if (ctl_.done()) active_ = false;
  }

  std::vector<Outbound> out;
  const json payload = state_payload();
  for (const auto& [conn, _] : out_seq_) {
    auto r = reply(conn, "state_update", payload);
    out.insert(out.end(), r.begin(), r.end());
  }
  return out;
}

json SessionCore::state_payload() const {
  const EquilibriumState st = integrator_.state();
  const ActuationCommand& cmd = integrator_.command();
  json pos = json::array();
  for (const auto& p : st.positions) pos.push_back(to_json(p));
  const PoseConfig pose = measure_pose(robot_, st.positions);
  json ctl = {{"active", active_},
              {"waypoints", ctl_.waypoints.size()},
              {"current", ctl_.current},
              {"safety_hold", hold_}};
  if (!ctl_.history.empty()) {
    const auto& h = ctl_.history.back();
    ctl["error"] = h.error_norm;
    ctl["tracked"] = h.tracked;
    ctl["gave_up"] = h.gave_up;
  }
  return {{"tick", tick_},
          {"t", time()},
          {"positions", pos},
          {"member_forces", st.member_forces},
          {"tip", to_json(robot_.tip_of(st.positions))},
          {"pose", {{"alpha", pose.alpha}, {"beta", pose.beta}}},
          {"command", to_json(cmd)},
          {"motor_angles", lengths_to_angles(cmd.delta_l, robot_.dyn.materials.winder_radius).theta},
          {"strains", tendon_strain(cmd.delta_l, robot_.tendon_rest_lengths())},
          {"sensor", to_json(sensor_)},
          {"controller", ctl},
          {"converged", integrator_.converged()},
          {"residual", st.residual}};
}

json SessionCore::snapshot() const {
  json j = to_json(ModelFile::from_robot(robot_, integrator_.state()));
  j["session"] = {{"tick", tick_}, {"command", to_json(integrator_.command())}};
  return j;
}

json to_json(const SessionOptions& o) {
  const auto& c = o.controller;
  json ctl = {{"gain", c.gain},
              {"waypoint_tol", c.waypoint_tol},
              {"max_steps_per_waypoint", c.max_steps_per_waypoint},
              {"safety_distance", c.safety_distance},
              {"thermal_tol", c.thermal_tol},
              {"feedforward", c.feedforward},
              {"pull_only", c.pull_only},
              {"learn", c.learn},
              {"damping", c.damping},
              {"max_step", c.max_step},
              {"stroke_limit", c.stroke_limit},
              {"stiffness", to_json(ActuationCommand{{}, c.stiffness})["stiffness"]}};
  if (c.thermal_target) ctl["thermal_target"] = *c.thermal_target;
  return {{"tick_hz", o.tick_hz}, {"steps_per_tick", o.steps_per_tick}, {"controller", ctl},
          {"environment", to_json(o.environment)}};
}

SessionOptions session_options_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("session options must be an object");
  SessionOptions o;
  try {
    o.tick_hz = j.value("tick_hz", o.tick_hz);
    o.steps_per_tick = j.value("steps_per_tick", o.steps_per_tick);
    if (j.contains("controller")) {
      const json& c = j["controller"];
      auto& cfg = o.controller;
      cfg.gain = c.value("gain", cfg.gain);
      cfg.waypoint_tol = c.value("waypoint_tol", cfg.waypoint_tol);
      cfg.max_steps_per_waypoint = c.value("max_steps_per_waypoint", cfg.max_steps_per_waypoint);
      cfg.safety_distance = c.value("safety_distance", cfg.safety_distance);
      cfg.thermal_tol = c.value("thermal_tol", cfg.thermal_tol);
      cfg.feedforward = c.value("feedforward", cfg.feedforward);
      cfg.pull_only = c.value("pull_only", cfg.pull_only);
      cfg.learn = c.value("learn", cfg.learn);
      cfg.damping = c.value("damping", cfg.damping);
      cfg.max_step = c.value("max_step", cfg.max_step);
      cfg.stroke_limit = c.value("stroke_limit", cfg.stroke_limit);
      if (c.contains("stiffness")) cfg.stiffness = stiffness_from_json(c["stiffness"]);
      if (c.contains("thermal_target")) cfg.thermal_target = c["thermal_target"].get<double>();
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("session options: ") + e.what());
  }
  if (j.contains("environment")) o.environment = environment_from_json(j["environment"]);
  return o;
}

json SessionCore::session_log() const {
  json ev = json::array();
  for (const auto& e : events_) ev.push_back({{"tick", e.tick}, {"message", e.message}});
  return {{"options", to_json(SessionOptions{options_.tick_hz, options_.steps_per_tick, options_.controller,
                                             initial_environment_})},
          {"ticks", tick_},
          {"events", ev},
          {"final_tip", to_json(tip())}};
}

SessionCore replay_session(const Robot& robot, const json& log,
                           const std::function<void(const SessionCore&)>& on_tick) {
  if (!log.is_object() || !log.contains("events") || !log["events"].is_array())
    throw SchemaError("session log needs an 'events' array");
  SessionCore core(robot, session_options_from_json(log.value("options", json::object())));
  const int conn = core.connect();
  const long ticks = log.value("ticks", 0L);
  std::size_t next = 0;
  const auto& events = log["events"];
  long seq = 0;
  for (long t = 0; t <= ticks; ++t) {
    while (next < events.size() && events[next].value("tick", 0L) == t) {
      json msg = events[next]["message"];
      msg["seq"] = ++seq;
      const auto replies = core.receive(conn, msg.dump());
      for (const auto& r : replies)
        if (r.message["kind"] == "error")
          throw SchemaError("replayed event rejected: " + r.message["payload"].value("message", std::string()));
      ++next;
    }
    if (t < ticks) {
      core.tick();
      if (on_tick) on_tick(core);
    }
  }
  if (next != events.size()) throw SchemaError("session log has events beyond its tick count");
  return core;
}

}  // namespace tspine
