#pragma once

#include <vector>

#include "sgues/model.hpp"

namespace sgues {

// Right-continuous piecewise-affine functional of a signal:
//   F(t) = sum over events in (0, t] of their jump + integral of the active mode's slope.
// Every dwell-time and activation inequality, and the certificate condition on
// (t0, t) pairs, is a bound on F(t) - F(t0).
struct Staircase {
  std::vector<double> mode_slope;    // dF/dt while a mode is active
  double switch_jump = 0.0;          // jump at every switch unless edge_jump is set
  Matrix edge_jump;                  // optional per-edge switch jump, (from, to)
  std::vector<double> impulse_jump;  // jump at self impulses, by mode; empty means 0

  double impulse_jump_of(Mode m) const { return m < impulse_jump.size() ? impulse_jump[m] : 0.0; }
  double jump_of(const Event& e, Mode before) const {
    if (e.kind == EventKind::self_impulse) return impulse_jump_of(e.mode);
    if (edge_jump.size() == 0) return switch_jump;
    return edge_jump(static_cast<Eigen::Index>(before), static_cast<Eigen::Index>(e.mode));
  }
};

// Extreme of F(t) - F(t0) over 0 <= t0 <= t <= horizon, with one-sided limits at events.
struct IncrementExtreme {
  double value = 0.0;
  Time t0;
  bool t0_left = false;  // true: limit from the left, i.e. the event at t0 is counted
  Time t;
  bool t_left = false;   // true: limit from the left, i.e. the event at t is not counted
};

IncrementExtreme max_increment(const Staircase& f, const HybridSignal& signal);
IncrementExtreme min_increment(const Staircase& f, const HybridSignal& signal);

// Running state of a staircase bound while a signal is being built forward in time.
// Tracks F and its running extreme so the bound F(t) - F(t0) <= (>=) limit can be
// maintained incrementally.
class StaircaseTracker {
 public:
  StaircaseTracker(Staircase f, BoundDirection direction, double limit);

  void advance(Mode mode, double dt);
  void apply(const Event& e, Mode before);
  // Slack of pairs ending at the current instant.
  double slack() const;
  // Smallest slack over every pair seen so far; nonnegative while the bound holds.
  double worst_slack() const { return worst_slack_; }
  // Time until slack reaches zero while `mode` stays active without events (+inf if never).
  double time_to_violation(Mode mode) const;
  // Minimal waiting time in `mode` before an event with jump `jump` keeps the bound (+inf if never).
  double earliest_event_delay(Mode mode, double jump) const;

  const Staircase& staircase() const { return f_; }
  BoundDirection direction() const { return direction_; }
  double limit() const { return limit_; }

 private:
  Staircase f_;
  BoundDirection direction_;
  double limit_;
  double value_ = 0.0;
  double extreme_ = 0.0;  // running min for upper bounds, running max for lower bounds
  double worst_slack_ = 0.0;

  void update();
};

}  // namespace sgues
