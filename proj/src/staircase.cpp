#include "sgues/staircase.hpp"

#include <cmath>
#include <limits>

namespace sgues {

namespace {

struct Knot {
  Time time;
  bool left;
  double value;
};

// Knots at 0, both sides of every event, and the horizon. F is affine between
// consecutive knots, so pairwise extremes are attained on knots.
std::vector<Knot> knots(const Staircase& f, const HybridSignal& signal) {
  std::vector<Knot> out;
  out.reserve(2 * signal.events().size() + 2);
  double value = 0.0;
  Time cursor{};
  Mode mode = signal.initial_mode();
  out.push_back({cursor, false, value});
  for (const Event& e : signal.events()) {
    value += f.mode_slope.at(mode) * (e.time - cursor).units();
    out.push_back({e.time, true, value});
    value += f.jump_of(e, mode);
    out.push_back({e.time, false, value});
    cursor = e.time;
    mode = e.mode;
  }
  if (signal.horizon() > cursor) {
    value += f.mode_slope.at(mode) * (signal.horizon() - cursor).units();
    out.push_back({signal.horizon(), false, value});
  }
  return out;
}

template <typename Better>
IncrementExtreme extreme_increment(const Staircase& f, const HybridSignal& signal, Better better) {
  const std::vector<Knot> k = knots(f, signal);
  IncrementExtreme best{0.0, k.front().time, k.front().left, k.front().time, k.front().left};
  std::size_t anchor = 0;  // knot minimising (or maximising) F among earlier knots
  for (std::size_t b = 0; b < k.size(); ++b) {
    if (better(k[anchor].value, k[b].value)) anchor = b;
    const double inc = k[b].value - k[anchor].value;
    if (better(inc, best.value)) best = {inc, k[anchor].time, k[anchor].left, k[b].time, k[b].left};
  }
  return best;
}

}  // namespace

IncrementExtreme max_increment(const Staircase& f, const HybridSignal& signal) {
  return extreme_increment(f, signal, [](double a, double b) { return a > b; });
}

IncrementExtreme min_increment(const Staircase& f, const HybridSignal& signal) {
  return extreme_increment(f, signal, [](double a, double b) { return a < b; });
}

StaircaseTracker::StaircaseTracker(Staircase f, BoundDirection direction, double limit)
    : f_(std::move(f)), direction_(direction), limit_(limit), worst_slack_(slack()) {}

// Slack is piecewise linear between events, so endpoint updates catch its minimum.
void StaircaseTracker::update() {
  extreme_ = direction_ == BoundDirection::upper ? std::min(extreme_, value_) : std::max(extreme_, value_);
  worst_slack_ = std::min(worst_slack_, slack());
}

void StaircaseTracker::advance(Mode mode, double dt) {
  value_ += f_.mode_slope.at(mode) * dt;
  update();
}

void StaircaseTracker::apply(const Event& e, Mode before) {
  value_ += f_.jump_of(e, before);
  update();
}

double StaircaseTracker::slack() const {
  return direction_ == BoundDirection::upper ? limit_ - (value_ - extreme_) : (value_ - extreme_) - limit_;
}

double StaircaseTracker::time_to_violation(Mode mode) const {
  const double s = f_.mode_slope.at(mode);
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (direction_ == BoundDirection::upper) return s > 0.0 ? std::max(slack(), 0.0) / s : inf;
  return s < 0.0 ? std::max(slack(), 0.0) / -s : inf;
}

double StaircaseTracker::earliest_event_delay(Mode mode, double jump) const {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (direction_ == BoundDirection::upper) {
    if (jump <= 0.0) return 0.0;
    if (jump > limit_) return inf;
    const double excess = value_ + jump - extreme_ - limit_;
    if (excess <= 0.0) return 0.0;
    const double s = f_.mode_slope.at(mode);
    return s < 0.0 ? excess / -s : inf;
  }
  // Lower bounds: a nonnegative jump never hurts; waiting cannot repair a drop
  // because the running maximum follows F upwards.
  if (jump >= 0.0) return 0.0;
  return value_ + jump - extreme_ >= limit_ ? 0.0 : inf;
}

}  // namespace sgues
