#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tspine/controller.hpp"
#include "tspine/robot.hpp"

namespace tspine {

struct SessionOptions {
  double tick_hz = 30.0;
  long steps_per_tick = 4000;  ///< integrator steps per tick at most
  ControllerConfig controller;
  Environment environment;
};

/// A message for one connection.
struct Outbound {
  int connection = 0;
  nlohmann::json message;
};

/// An accepted writer message and the tick it took effect before.
struct SessionEvent {
  long tick = 0;
  nlohmann::json message;
};

/// The authoritative session loop without any transport. Inbound lines are
/// queued and applied atomically at the start of the next tick; `tick()`
/// advances the physics and emits one state_update per connection.
class SessionCore {
 public:
  explicit SessionCore(Robot robot, SessionOptions options = {});

  /// The first connection (and the next one after the writer leaves) may
  /// write; the others are read-only viewers.
  int connect();
  void disconnect(int connection);
  bool is_writer(int connection) const { return writer_ && *writer_ == connection; }

  /// Handles one inbound line: an ack (kind "command"/"sensor"), a metrics
  /// reply, or an error echoing the offending seq.
  std::vector<Outbound> receive(int connection, const std::string& line);
  std::vector<Outbound> tick();

  long ticks() const { return tick_; }
  double time() const { return static_cast<double>(tick_) / options_.tick_hz; }
  Vec3 tip() const;
  const Robot& robot() const { return robot_; }
  EquilibriumState state() const { return integrator_.state(); }
  const ActuationCommand& command() const { return integrator_.command(); }
  const ControllerState& controller() const { return ctl_; }
  bool controller_active() const { return active_; }
  bool converged() const { return integrator_.converged(); }
  const SensorReading& last_sensor() const { return sensor_; }
  bool safety_hold() const { return hold_; }
  const SessionOptions& options() const { return options_; }

  /// ModelFile JSON with the current state.
  nlohmann::json snapshot() const;
  nlohmann::json state_payload() const;

  const std::vector<SessionEvent>& events() const { return events_; }
  /// Replayable record: options, events, tick count and final tip.
  nlohmann::json session_log() const;

 private:
  std::vector<Outbound> reply(int connection, const std::string& kind, nlohmann::json payload);
  std::vector<Outbound> error(int connection, const nlohmann::json& echo, const std::string& kind,
                              const std::string& message);
  void apply(const nlohmann::json& message);
  void set_command(const ActuationCommand& command);

  Robot robot_;
  SessionOptions options_;
  Environment initial_environment_;
  Integrator integrator_;
  ControllerState ctl_;
  bool active_ = false;
  bool hold_ = false;
  SensorReading sensor_;
  std::optional<SensorReading> injected_;
  long tick_ = 0;
  int next_connection_ = 1;
  std::optional<int> writer_;
  std::map<int, long> out_seq_;
  std::map<int, long> in_seq_;
  std::vector<nlohmann::json> pending_;
  std::vector<SessionEvent> events_;
};

/// Validates a command payload (throws SchemaError / ParameterError).
void check_command_payload(const nlohmann::json& payload, const Robot& robot);

SessionOptions session_options_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SessionOptions& options);

/// Replays a `session_log()` headless; returns the core after the recorded
/// number of ticks. `on_tick` sees the core after every tick.
SessionCore replay_session(const Robot& robot, const nlohmann::json& log,
                           const std::function<void(const SessionCore&)>& on_tick = {});

}  // namespace tspine
