#include <catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "sgues/staircase.hpp"

using namespace sgues;
using Catch::Matchers::WithinAbs;

namespace {

HybridSignal random_signal(std::mt19937_64& gen, std::size_t modes, std::size_t events) {
  std::uniform_int_distribution<std::int64_t> gap(1, 300'000'000);
  std::uniform_int_distribution<std::size_t> pick(0, modes - 1);
  std::bernoulli_distribution impulse(0.5);
  Mode mode = pick(gen);
  const Mode initial = mode;
  std::vector<Event> ev;
  Time t;
  for (std::size_t k = 0; k < events; ++k) {
    t += Time::from_ticks(gap(gen));
    if (impulse(gen) || modes == 1) {
      ev.push_back({t, EventKind::self_impulse, mode});
    } else {
      Mode next = pick(gen);
      while (next == mode) next = pick(gen);
      mode = next;
      ev.push_back({t, EventKind::mode_switch, mode});
    }
  }
  // Sometimes end exactly on the last event.
  const Time horizon = std::bernoulli_distribution(0.3)(gen) && !ev.empty() ? t : t + Time::parse("0.2");
  return HybridSignal(initial, ev, horizon);
}

Staircase random_staircase(std::mt19937_64& gen, std::size_t modes) {
  std::normal_distribution<double> normal;
  Staircase f;
  for (Mode m = 0; m < modes; ++m) {
    f.mode_slope.push_back(normal(gen));
    f.impulse_jump.push_back(normal(gen));
  }
  f.switch_jump = normal(gen);
  if (std::bernoulli_distribution(0.3)(gen)) {
    f.edge_jump = Matrix(modes, modes);
    for (Eigen::Index k = 0; k < f.edge_jump.size(); ++k) f.edge_jump.data()[k] = normal(gen);
  }
  return f;
}

}  // namespace

TEST_CASE("sweep extremes match the pair-grid oracle") {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t modes = 1 + trial % 3;
    const HybridSignal s = random_signal(gen, modes, trial % 25);
    const Staircase f = random_staircase(gen, modes);
    CHECK_THAT(max_increment(f, s).value, WithinAbs(oracle::pair_grid_increment(f, s, true), 1e-9));
    CHECK_THAT(min_increment(f, s).value, WithinAbs(oracle::pair_grid_increment(f, s, false), 1e-9));
  }
}

TEST_CASE("reported pair attains the extreme") {
  const HybridSignal s(0, {{Time::parse("1"), EventKind::mode_switch, 1}, {Time::parse("1.5"), EventKind::mode_switch, 0}},
                       Time::parse("3"));
  Staircase f;
  f.mode_slope = {-1.0, -1.0};
  f.switch_jump = 1.0;
  const auto e = max_increment(f, s);
  CHECK_THAT(e.value, WithinAbs(1.5, 1e-12));
  CHECK(e.t0 == Time::parse("1"));
  CHECK(e.t0_left);
  CHECK(e.t == Time::parse("1.5"));
}

TEST_CASE("incremental tracker agrees with the batch extreme") {
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t modes = 1 + trial % 3;
    const HybridSignal s = random_signal(gen, modes, 20);
    const Staircase f = random_staircase(gen, modes);
    for (BoundDirection dir : {BoundDirection::upper, BoundDirection::lower}) {
      StaircaseTracker tr(f, dir, 0.0);
      Mode m = s.initial_mode();
      Time at;
      for (const auto& e : s.events()) {
        tr.advance(m, (e.time - at).units());
        tr.apply(e, m);
        at = e.time;
        m = e.mode;
      }
      tr.advance(m, (s.horizon() - at).units());
      const double batch = dir == BoundDirection::upper ? -max_increment(f, s).value : min_increment(f, s).value;
      CHECK_THAT(tr.worst_slack(), WithinAbs(std::min(batch, 0.0), 1e-9));
    }
  }
}

TEST_CASE("tracker timing helpers") {
  Staircase f;
  f.mode_slope = {-10.0};
  f.switch_jump = 1.0;
  f.impulse_jump = {1.0};
  StaircaseTracker upper(f, BoundDirection::upper, 1.0);
  CHECK(upper.earliest_event_delay(0, 1.0) == 0.0);
  upper.apply({Time::parse("0"), EventKind::self_impulse, 0}, 0);
  CHECK_THAT(upper.earliest_event_delay(0, 1.0), WithinAbs(0.1, 1e-12));
  CHECK(upper.earliest_event_delay(0, 2.0) == std::numeric_limits<double>::infinity());

  StaircaseTracker lower(f, BoundDirection::lower, -1.0);
  CHECK_THAT(lower.time_to_violation(0), WithinAbs(0.1, 1e-12));
  lower.advance(0, 0.05);
  CHECK_THAT(lower.time_to_violation(0), WithinAbs(0.05, 1e-12));
  CHECK(lower.earliest_event_delay(0, 1.0) == 0.0);
}
