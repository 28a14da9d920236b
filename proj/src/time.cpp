#include "sgues/time.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace sgues {

Time Time::from_units(double units) {
  const double scaled = std::round(units * static_cast<double>(kTicksPerUnit));
  if (!std::isfinite(scaled) || std::abs(scaled) > 9.0e18) {
    throw std::invalid_argument("time value out of range");
  }
  return from_ticks(static_cast<std::int64_t>(scaled));
}

Time Time::parse(std::string_view text) {
  if (text.empty()) throw std::invalid_argument("empty time literal");
  bool negative = false;
  std::size_t pos = 0;
  if (text[0] == '+' || text[0] == '-') {
    negative = text[0] == '-';
    pos = 1;
  }
  std::int64_t whole = 0;
  std::int64_t frac = 0;
  int frac_digits = 0;
  bool seen_digit = false;
  bool in_frac = false;
  constexpr std::int64_t kWholeLimit = std::numeric_limits<std::int64_t>::max() / kTicksPerUnit;
  for (; pos < text.size(); ++pos) {
    const char c = text[pos];
    if (c == '.' && !in_frac) {
      in_frac = true;
      continue;
    }
    if (c < '0' || c > '9') throw std::invalid_argument("malformed time literal: " + std::string(text));
    seen_digit = true;
    const int d = c - '0';
    if (in_frac) {
      if (++frac_digits > 9) {
        if (d != 0) throw std::invalid_argument("time literal finer than 1e-9: " + std::string(text));
        continue;
      }
      frac = frac * 10 + d;
    } else {
      whole = whole * 10 + d;
      if (whole > kWholeLimit) throw std::invalid_argument("time literal out of range");
    }
  }
  if (!seen_digit) throw std::invalid_argument("malformed time literal: " + std::string(text));
  for (int k = std::min(frac_digits, 9); k < 9; ++k) frac *= 10;
  const std::int64_t ticks = whole * kTicksPerUnit + frac;
  return from_ticks(negative ? -ticks : ticks);
}

std::string Time::to_string() const {
  const bool negative = ticks_ < 0;
  const std::uint64_t mag = negative ? static_cast<std::uint64_t>(-(ticks_ + 1)) + 1u
                                     : static_cast<std::uint64_t>(ticks_);
  const std::uint64_t whole = mag / kTicksPerUnit;
  std::uint64_t frac = mag % kTicksPerUnit;
  std::string out = (negative ? "-" : "") + std::to_string(whole);
  if (frac != 0) {
    std::string digits = std::to_string(frac);
    digits.insert(0, 9 - digits.size(), '0');
    while (!digits.empty() && digits.back() == '0') digits.pop_back();
    out += "." + digits;
  }
  return out;
}

}  // namespace sgues
