#pragma once

#include <vector>

#include <json.hpp>

#include "tspine/export.hpp"

namespace tspine {

struct SimulationResult {
  std::vector<TrajectoryRow> rows;       ///< first row is the initial state
  std::vector<EquilibriumState> states;  ///< aligned with rows
  bool converged = true;                 ///< every step converged
};

/// Batch actuation script: {"steps": [{"delta_l": [..], "stiffness": "low",
/// "dt": 1}, ...]} (a bare array of steps is accepted too). Each step is
/// relaxed to equilibrium from the previous one. A session log (an object
/// with "events") is replayed tick by tick instead.
SimulationResult run_script(const Robot& robot, const nlohmann::json& script, const RelaxParams& params = {});

bool is_session_log(const nlohmann::json& script);

}  // namespace tspine
