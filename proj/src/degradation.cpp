#include "tspine/degradation.hpp"

#include <cmath>

#include "tspine/error.hpp"

namespace tspine {

double capstan_attenuate(double tension_in, double mu, double wrap) {
  if (!(tension_in >= 0.0)) throw ParameterError("tension", "input tension must be non-negative");
  if (!(mu >= 0.0)) throw ParameterError("friction_mu", "friction coefficient must be non-negative");
  if (!(wrap >= 0.0)) throw ParameterError("wrap_angle", "wrap angle must be non-negative");
  if (mu == 0.0 || wrap == 0.0) return tension_in;
  return tension_in * std::exp(-mu * wrap);
}

double decay_factor(const DegradationState& d) {
  check_degradation(d);
  const double x = d.decay_rate * d.elapsed;
  return x == 0.0 ? 1.0 : std::exp(-x);
}

EquilibriumState apply_prestress_decay(const DynamicsModel& dyn, const EquilibriumState& state,
                                       const DegradationState& d, const ActuationCommand& command,
                                       const RelaxParams& params) {
  const double factor = decay_factor(d);
  if (factor == 1.0) return state;
  ActuationCommand decayed = command;
  decayed.stiffness = Stiffness::explicit_scale(state.prestress_scale * factor);
  return relax_dynamics(dyn, state, decayed, params).final_state();
}

}  // namespace tspine
