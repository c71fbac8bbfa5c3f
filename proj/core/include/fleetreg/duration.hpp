#pragma once

#include <compare>
#include <cstdint>
#include <string>

namespace fleetreg {

// Wall-clock duration held as a fixed-point count of deciseconds (0.1 s).
// All scheduling and report arithmetic happens on this type so that emitted
// files are byte-deterministic across platforms.
class Deciseconds {
 public:
  constexpr Deciseconds() = default;
  constexpr explicit Deciseconds(std::int64_t ticks) : ticks_(ticks) {}

  static constexpr Deciseconds from_ds(std::int64_t ticks) { return Deciseconds(ticks); }
  static Deciseconds from_seconds(double seconds);

  constexpr std::int64_t ticks() const { return ticks_; }
  constexpr double seconds() const { return static_cast<double>(ticks_) / 10.0; }

  // "59" for whole values, "65.5" otherwise.
  std::string to_string() const;
  // Always one fractional digit: "59.0", "65.5".
  std::string to_string_fixed() const;

  constexpr Deciseconds operator+(Deciseconds o) const { return Deciseconds(ticks_ + o.ticks_); }
  constexpr Deciseconds operator-(Deciseconds o) const { return Deciseconds(ticks_ - o.ticks_); }
  constexpr Deciseconds operator*(std::int64_t k) const { return Deciseconds(ticks_ * k); }
  Deciseconds& operator+=(Deciseconds o) { ticks_ += o.ticks_; return *this; }
  auto operator<=>(const Deciseconds&) const = default;

 private:
  std::int64_t ticks_ = 0;
};

// Rounds half away from zero; "at most one fractional digit" inputs are exact.
Deciseconds parse_duration(const std::string& text);

}  // namespace fleetreg
