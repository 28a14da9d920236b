#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace sgues {

// Exact instant on a fixed decimal grid so that half-open interval counting
// (t0, t] never depends on floating-point rounding.
class Time {
 public:
  static constexpr std::int64_t kTicksPerUnit = 1'000'000'000;

  constexpr Time() = default;
  static constexpr Time from_ticks(std::int64_t ticks) {
    Time t;
    t.ticks_ = ticks;
    return t;
  }
  // Nearest tick; throws std::invalid_argument when not finite or out of range.
  static Time from_units(double units);
  // Exact parse of a decimal literal with at most 9 fractional digits.
  static Time parse(std::string_view decimal);

  constexpr std::int64_t ticks() const { return ticks_; }
  double units() const { return static_cast<double>(ticks_) / static_cast<double>(kTicksPerUnit); }
  // Shortest exact decimal representation.
  std::string to_string() const;

  constexpr auto operator<=>(const Time&) const = default;
  constexpr Time operator+(Time o) const { return from_ticks(ticks_ + o.ticks_); }
  constexpr Time operator-(Time o) const { return from_ticks(ticks_ - o.ticks_); }
  constexpr Time& operator+=(Time o) {
    ticks_ += o.ticks_;
    return *this;
  }

 private:
  std::int64_t ticks_ = 0;
};

}  // namespace sgues
