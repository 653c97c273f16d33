#pragma once

#include "tspine/dynamics.hpp"

namespace tspine {

/// Capstan law: tension after sliding over a joint with wrap angle `wrap`.
double capstan_attenuate(double tension_in, double mu, double wrap);

/// Multiplicative prestress factor exp(-decay_rate * elapsed).
double decay_factor(const DegradationState& d);

/// Scales the prestress by `decay_factor(d)` and re-equilibrates under
/// `command`. A factor of exactly 1 returns `state` untouched.
EquilibriumState apply_prestress_decay(const DynamicsModel& dyn, const EquilibriumState& state,
                                       const DegradationState& d, const ActuationCommand& command = {},
                                       const RelaxParams& params = {});

}  // namespace tspine
