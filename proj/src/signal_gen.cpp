#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <string>

#include "sgues/errors.hpp"
#include "sgues/rng.hpp"
#include "sgues/simulator.hpp"

namespace sgues {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSlackFloor = -1e-12;

struct Trackers {
  std::vector<StaircaseTracker> items;

  void step(Mode mode, double dt, const Event& e) {
    for (auto& t : items) {
      t.advance(mode, dt);
      t.apply(e, mode);
    }
  }
  void advance(Mode mode, double dt) {
    for (auto& t : items) t.advance(mode, dt);
  }
  // Index of the first violated bound, items.size() when all hold.
  std::size_t broken() const {
    for (std::size_t k = 0; k < items.size(); ++k)
      if (items[k].slack() < kSlackFloor) return k;
    return items.size();
  }
  bool intact() const { return broken() == items.size(); }
  // Earliest delay for an event of the given shape while `mode` stays active.
  double earliest(Mode mode, const Event& probe) const {
    double d = 0.0;
    for (const auto& t : items) d = std::max(d, t.earliest_event_delay(mode, t.staircase().jump_of(probe, mode)));
    return d;
  }
  std::pair<double, std::size_t> deadline(Mode mode) const {
    double best = kInf;
    std::size_t arg = items.size();
    for (std::size_t k = 0; k < items.size(); ++k) {
      const double d = items[k].time_to_violation(mode);
      if (d < best) {
        best = d;
        arg = k;
      }
    }
    return {best, arg};
  }
};

// Target dwell per mode: a base cycle in which every group's share of time
// equals its N_a, sized so the tightest upper activation bound keeps slack.
std::vector<double> base_dwell(const ConstraintProfile& profile, std::size_t modes, const GeneratorOptions& opt) {
  double period = kInf;
  for (const auto& g : profile.groups)
    if (g.direction == BoundDirection::upper && g.n_a > 0.0 && g.n_a < 1.0 && g.t_a > 0.0)
      period = std::min(period, 0.9 * g.t_a / ((1.0 - g.n_a) * g.n_a));
  if (!std::isfinite(period)) period = static_cast<double>(std::max<std::size_t>(modes, 2)) * opt.mean_gap;

  const double floor = 2.0 * opt.min_gap.units();
  std::vector<double> dwell(modes, period / static_cast<double>(modes));
  for (const auto& g : profile.groups) {
    if (g.modes.empty()) continue;
    for (Mode m : g.modes)
      if (m < modes) dwell[m] = g.n_a * period / static_cast<double>(g.modes.size());
  }
  for (double& d : dwell) d = std::max(d, floor);
  return dwell;
}

std::vector<int> distance_to_group(const JumpGraph& graph, const std::vector<Mode>& group) {
  const std::size_t n = graph.mode_count();
  std::vector<int> dist(n, std::numeric_limits<int>::max());
  // Reverse BFS from the group members.
  std::vector<std::vector<Mode>> preds(n);
  for (const Edge& e : graph.edges()) preds[e.to].push_back(e.from);
  std::deque<Mode> queue;
  for (Mode m : group)
    if (m < n) {
      dist[m] = 0;
      queue.push_back(m);
    }
  while (!queue.empty()) {
    const Mode m = queue.front();
    queue.pop_front();
    for (Mode p : preds[m])
      if (dist[p] == std::numeric_limits<int>::max()) {
        dist[p] = dist[m] + 1;
        queue.push_back(p);
      }
  }
  return dist;
}

struct AttemptSettings {
  double fraction = 0.9;
  double dwell_scale = 1.0;
};

class Builder {
 public:
  Builder(const ConstraintProfile& profile, const JumpGraph& graph, const std::vector<ProfileBound>& bounds,
          Time horizon, SignalStyle style, const GeneratorOptions& opt, AttemptSettings settings, CounterRng rng)
      : profile_(profile), graph_(graph), bounds_(bounds), horizon_(horizon), style_(style), opt_(opt),
        settings_(settings), rng_(rng) {
    for (const auto& b : bounds_) trackers_.items.emplace_back(b.f, b.direction, b.limit);
    dwell_ = base_dwell(profile_, graph_.mode_count(), opt_);
    for (double& d : dwell_) d *= settings_.dwell_scale;
    adversarial_.assign(graph_.mode_count(), false);
    for (const auto& b : bounds_)
      if (b.kind == BoundKind::impulse && b.direction == BoundDirection::upper && b.f.mode_slope[b.subject] != 0.0)
        adversarial_[b.subject] = true;
  }

  std::optional<HybridSignal> run(std::string& why) {
    const std::size_t modes = graph_.mode_count();
    const Mode initial = opt_.initial_mode ? *opt_.initial_mode
                         : style_ == SignalStyle::periodic ? 0
                                                           : static_cast<Mode>(rng_.below(modes));
    if (initial >= modes) {
      why = "initial mode out of range";
      return std::nullopt;
    }
    mode_ = initial;
    last_visit_.assign(modes, -1.0);
    last_visit_[mode_] = 0.0;
    begin_visit();
    const double gap = opt_.min_gap.units();

    for (std::size_t guard = 0; guard < 50'000'000; ++guard) {
      const double remaining = (horizon_ - now_).units();
      if (remaining <= 0.0) break;
      const auto [dd, cure] = trackers_.deadline(mode_);
      const double in_mode = (now_ - entered_).units();
      const Event switch_probe{now_, EventKind::mode_switch, mode_};
      const Event impulse_probe{now_, EventKind::self_impulse, mode_};
      const bool has_successor = !graph_.successors(mode_).empty();

      double sw = has_successor ? std::max(dwell_goal_ - in_mode, 0.0) : kInf;
      double imp = profile_.self_impulses ? impulse_goal_ : kInf;
      const bool cure_by_impulse = cure < bounds_.size() && bounds_[cure].kind == BoundKind::impulse &&
                                   bounds_[cure].subject == mode_ && profile_.self_impulses;
      if (std::isfinite(dd)) {
        if (cure_by_impulse) imp = std::min(imp, settings_.fraction * dd);
        else sw = std::min(sw, settings_.fraction * dd);
      }
      if (has_successor) sw = std::max({sw, trackers_.earliest(mode_, switch_probe), gap});
      if (profile_.self_impulses) imp = std::max({imp, trackers_.earliest(mode_, impulse_probe), gap});

      bool impulse_next = imp < sw;
      // An impulse must leave room for the repairing switch after it.
      if (impulse_next && !cure_by_impulse && std::isfinite(dd) && dd - imp < 2.0 * gap && std::isfinite(sw))
        impulse_next = false;
      const double delay = impulse_next ? imp : sw;
      if (!std::isfinite(delay) || delay >= remaining) {
        if (dd >= remaining) break;
        why = "deadline before the horizon cannot be met";
        return std::nullopt;
      }
      if (delay > dd) {
        why = "bound '" + bounds_[cure].name + "' cannot be repaired in time";
        return std::nullopt;
      }
      // Round up to honour earliest-event delays, down only when the deadline needs it.
      const double scale = static_cast<double>(Time::kTicksPerUnit);
      auto ticks = static_cast<std::int64_t>(std::ceil(delay * scale));
      if (static_cast<double>(ticks) / scale > dd) ticks = static_cast<std::int64_t>(std::floor(dd * scale));
      Time step = std::max(Time::from_ticks(ticks), opt_.min_gap);
      const double dt = step.units();

      Event e{now_ + step, impulse_next ? EventKind::self_impulse : EventKind::mode_switch, mode_};
      if (!impulse_next) {
        const auto target = choose_target(dt, cure);
        if (!target) {
          why = "no admissible successor of mode " + std::to_string(mode_ + 1);
          return std::nullopt;
        }
        e.mode = *target;
      }
      trackers_.step(mode_, dt, e);
      if (const std::size_t k = trackers_.broken(); k < bounds_.size()) {
        why = (impulse_next ? "impulse at " : "switch at ") + e.time.to_string() + " breaks '" + bounds_[k].name + "'";
        return std::nullopt;
      }
      events_.push_back(e);
      now_ = e.time;
      if (impulse_next) {
        impulse_goal_ = draw_impulse_gap();
      } else {
        mode_ = e.mode;
        last_visit_[mode_] = now_.units();
        begin_visit();
      }
    }
    trackers_.advance(mode_, (horizon_ - now_).units());
    if (!trackers_.intact()) {
      why = "tail segment breaks a bound";
      return std::nullopt;
    }
    return HybridSignal(initial, events_, horizon_);
  }

 private:
  void begin_visit() {
    entered_ = now_;
    dwell_goal_ = style_ == SignalStyle::periodic ? dwell_[mode_] : dwell_[mode_] * rng_.uniform(0.3, 1.7);
    impulse_goal_ = draw_impulse_gap();
  }

  double draw_impulse_gap() {
    if (style_ == SignalStyle::periodic) return adversarial_[mode_] ? 0.0 : kInf;
    return -opt_.mean_gap * std::log(1.0 - rng_.uniform());
  }

  std::optional<Mode> choose_target(double dt, std::size_t cure) {
    const double gap = opt_.min_gap.units();
    std::vector<Mode> feasible;
    std::vector<Mode> roomy;
    for (Mode j : graph_.successors(mode_)) {
      Trackers trial = trackers_;
      trial.step(mode_, dt, Event{now_, EventKind::mode_switch, j});
      if (!trial.intact()) continue;
      feasible.push_back(j);
      if (trial.deadline(j).first >= 2.0 * gap) roomy.push_back(j);
    }
    std::vector<Mode> pool = roomy.empty() ? feasible : roomy;
    if (pool.empty()) return std::nullopt;

    if (cure < bounds_.size() && bounds_[cure].kind == BoundKind::activation &&
        bounds_[cure].direction == BoundDirection::lower) {
      const auto dist = distance_to_group(graph_, profile_.groups[bounds_[cure].subject].modes);
      int best = std::numeric_limits<int>::max();
      for (Mode j : pool) best = std::min(best, dist[j]);
      std::erase_if(pool, [&](Mode j) { return dist[j] != best; });
    }
    if (style_ == SignalStyle::randomized) return pool[rng_.below(pool.size())];
    return *std::min_element(pool.begin(), pool.end(), [&](Mode a, Mode b) {
      return last_visit_[a] != last_visit_[b] ? last_visit_[a] < last_visit_[b] : a < b;
    });
  }

  const ConstraintProfile& profile_;
  const JumpGraph& graph_;
  const std::vector<ProfileBound>& bounds_;
  Time horizon_;
  SignalStyle style_;
  const GeneratorOptions& opt_;
  AttemptSettings settings_;
  CounterRng rng_;

  Trackers trackers_;
  std::vector<double> dwell_;
  std::vector<bool> adversarial_;
  std::vector<double> last_visit_;
  std::vector<Event> events_;
  Mode mode_ = 0;
  Time now_;
  Time entered_;
  double dwell_goal_ = 0.0;
  double impulse_goal_ = kInf;
};

}  // namespace

HybridSignal generate_signal(const ConstraintProfile& profile, const JumpGraph& graph, Time horizon,
                             std::uint64_t seed, SignalStyle style, const GeneratorOptions& options) {
  if (graph.mode_count() == 0) throw InputError("signal generation needs at least one mode");
  if (horizon < Time{}) throw InputError("horizon must be nonnegative");
  if (options.min_gap <= Time{}) throw InputError("minimum event gap must be positive");
  const auto bounds = profile_bounds(profile, graph.mode_count());
  static constexpr AttemptSettings kPeriodic[] = {{0.9, 1.0}, {0.8, 1.0}, {0.9, 0.8}, {0.95, 0.9},
                                                  {0.7, 0.7}, {0.9, 1.25}, {0.6, 0.5}, {0.8, 0.35}};
  std::string why = "no attempt made";
  for (int attempt = 0; attempt < std::max(options.max_attempts, 1); ++attempt) {
    AttemptSettings settings{options.deadline_fraction, 1.0};
    if (style == SignalStyle::periodic) {
      if (attempt >= static_cast<int>(std::size(kPeriodic))) break;
      settings = kPeriodic[attempt];
      if (attempt == 0) settings.fraction = options.deadline_fraction;
    }
    Builder builder(profile, graph, bounds, horizon, style, options, settings,
                    CounterRng(seed, static_cast<std::uint64_t>(attempt)));
    auto signal = builder.run(why);
    if (!signal) continue;
    const AuditReport audit = audit_signal(*signal, profile, graph);
    if (audit.passed()) return *signal;
    why = "constructed signal failed its audit";
  }
  throw GenerationError("infeasible profile: " + why);
}

}  // namespace sgues
