#include "tspine/script.hpp"

#include "tspine/error.hpp"
#include "tspine/model_io.hpp"
#include "tspine/session.hpp"

namespace tspine {

using nlohmann::json;

bool is_session_log(const json& script) { return script.is_object() && script.contains("events"); }

SimulationResult run_script(const Robot& robot, const json& script, const RelaxParams& params) {
  SimulationResult out;
  if (is_session_log(script)) {
    SessionCore probe(robot, session_options_from_json(script.value("options", json::object())));
    out.rows.push_back(trajectory_row(robot, 0.0, probe.command(), probe.state()));
    out.states.push_back(probe.state());
    replay_session(robot, script, [&](const SessionCore& core) {
      const EquilibriumState st = core.state();
      out.rows.push_back(trajectory_row(robot, core.time(), core.command(), st));
      out.states.push_back(st);
      out.converged = core.converged();
    });
    return out;
  }

  const json* steps = &script;
  if (script.is_object()) {
    if (!script.contains("steps")) throw SchemaError("script needs a 'steps' array or 'events'");
    steps = &script["steps"];
  }
  if (!steps->is_array()) throw SchemaError("script steps must be an array");

  Plant plant(robot, params);
  out.rows.push_back(trajectory_row(robot, 0.0, plant.command(), plant.state()));
  out.states.push_back(plant.state());
  double t = 0.0;
  ActuationCommand cmd;
  for (const auto& step : *steps) {
    if (!step.is_object()) throw SchemaError("script step must be an object");
    if (step.contains("delta_l")) cmd.delta_l = command_from_json(step).delta_l;
    if (step.contains("stiffness")) cmd.stiffness = stiffness_from_json(step["stiffness"]);
    double dt = 1.0;
    if (step.contains("dt")) {
      if (!step["dt"].is_number() || !(step["dt"].get<double>() > 0.0)) throw SchemaError("dt must be positive");
      dt = step["dt"].get<double>();
    }
    t += dt;
    plant.apply(cmd);
    out.converged = out.converged && plant.converged();
    out.rows.push_back(trajectory_row(robot, t, cmd, plant.state()));
    out.states.push_back(plant.state());
  }
  return out;
}

}  // namespace tspine
