#include "tspine/command.hpp"

#include <cmath>
#include <sstream>

namespace tspine {

std::string to_string(const Stiffness& s) {
  switch (s.level) {
    case StiffnessLevel::High: return "high";
    case StiffnessLevel::Low: return "low";
    case StiffnessLevel::Explicit: {
      std::ostringstream os;
      os.precision(17);
      os << s.scale;
      return os.str();
    }
  }
  return "high";
}

std::optional<Stiffness> parse_stiffness(const std::string& text) {
  if (text == "high") return Stiffness::high();
  if (text == "low") return Stiffness::low();
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size() && std::isfinite(v) && v > 0.0) return Stiffness::explicit_scale(v);
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

}  // namespace tspine
