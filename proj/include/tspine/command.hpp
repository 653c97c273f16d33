#pragma once

#include <array>
#include <optional>
#include <string>

namespace tspine {

enum class StiffnessLevel { High, Low, Explicit };

/// Stiffness request: a named level or an explicit prestress scale.
struct Stiffness {
  StiffnessLevel level = StiffnessLevel::High;
  double scale = 1.0;  ///< used only when level == Explicit

  static Stiffness high() { return {StiffnessLevel::High, 1.0}; }
  static Stiffness low() { return {StiffnessLevel::Low, 1.0}; }
  static Stiffness explicit_scale(double s) { return {StiffnessLevel::Explicit, s}; }

  bool operator==(const Stiffness&) const = default;
};

std::string to_string(const Stiffness& s);
/// Accepts "high", "low" or a positive number.
std::optional<Stiffness> parse_stiffness(const std::string& text);

struct StiffnessLevels {
  double high = 1.0;
  double low = 0.3;

  bool operator==(const StiffnessLevels&) const = default;

  double resolve(const Stiffness& s) const {
    switch (s.level) {
      case StiffnessLevel::High: return high;
      case StiffnessLevel::Low: return low;
      case StiffnessLevel::Explicit: return s.scale;
    }
    return high;
  }
};

using Triple = std::array<double, 3>;

/// Tendon length changes (negative shortens, i.e. pulls) and stiffness.
struct ActuationCommand {
  Triple delta_l{0.0, 0.0, 0.0};
  Stiffness stiffness = Stiffness::high();

  bool operator==(const ActuationCommand&) const = default;
};

}  // namespace tspine
