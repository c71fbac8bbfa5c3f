#include "fleetreg/duration.hpp"

#include <cmath>
#include <cstdlib>

#include "fleetreg/error.hpp"

namespace fleetreg {

Deciseconds Deciseconds::from_seconds(double seconds) {
  return Deciseconds(static_cast<std::int64_t>(std::llround(seconds * 10.0)));
}

std::string Deciseconds::to_string() const {
  if (ticks_ % 10 == 0) return std::to_string(ticks_ / 10);
  return to_string_fixed();
}

std::string Deciseconds::to_string_fixed() const {
  std::int64_t t = ticks_;
  bool neg = t < 0;
  if (neg) t = -t;
  std::string s = (neg ? "-" : "") + std::to_string(t / 10) + "." +
                  std::to_string(t % 10);
  return s;
}

Deciseconds parse_duration(const std::string& text) {
  char* end = nullptr;
  double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0') {
    throw config_error("not a duration: '" + text + "'");
  }
  return Deciseconds::from_seconds(v);
}

}  // namespace fleetreg
