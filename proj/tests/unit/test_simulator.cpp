#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "sgues/certifier.hpp"
#include "sgues/errors.hpp"
#include "sgues/simulator.hpp"
#include "sgues/spec_io.hpp"

using namespace sgues;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Profile with only the switching branch used by the L = 2 certificate.
ConstraintProfile lower_branch_profile() {
  ConstraintProfile p = fixture::unstable_profile();
  p.switching.upper.reset();
  return p;
}

const TrajectorySample& sample_at(const HybridTrajectory& tr, double t, SampleSide side) {
  for (const auto& s : tr.samples)
    if (s.side == side && std::abs(s.t - t) < 1e-12) return s;
  throw std::logic_error("no sample");
}

double max_sample_gap(const HybridTrajectory& a, const HybridTrajectory& b) {
  REQUIRE(a.samples.size() == b.samples.size());
  double gap = 0.0;
  for (std::size_t k = 0; k < a.samples.size(); ++k) gap = std::max(gap, (a.samples[k].x - b.samples[k].x).norm());
  return gap;
}

}  // namespace

TEST_CASE("generated signals pass their own audit") {
  const auto profile = lower_branch_profile();
  const auto graph = fixture::unstable_system().graph;
  for (auto style : {SignalStyle::periodic, SignalStyle::randomized}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto s = generate_signal(profile, graph, Time::parse("5"), seed, style);
      const auto audit = audit_signal(s, profile, graph);
      CHECK(audit.passed());
      CHECK(audit.graph_violations.empty());
      CHECK(s.horizon() == Time::parse("5"));
    }
  }
}

TEST_CASE("generator is deterministic") {
  const auto profile = lower_branch_profile();
  const auto graph = fixture::unstable_system().graph;
  const auto a = generate_signal(profile, graph, Time::parse("3"), 7, SignalStyle::randomized);
  const auto b = generate_signal(profile, graph, Time::parse("3"), 7, SignalStyle::randomized);
  REQUIRE(a.events().size() == b.events().size());
  for (std::size_t k = 0; k < a.events().size(); ++k) {
    CHECK(a.events()[k].time == b.events()[k].time);
    CHECK(a.events()[k].mode == b.events()[k].mode);
    CHECK(a.events()[k].kind == b.events()[k].kind);
  }
}

TEST_CASE("vacuous profile still yields admissible signals") {
  ConstraintProfile p;
  p.impulse = {std::nullopt, std::nullopt};
  const auto s = generate_signal(p, JumpGraph::complete(2), Time::parse("2"), 1, SignalStyle::periodic);
  CHECK(audit_signal(s, p, JumpGraph::complete(2)).passed());
}

TEST_CASE("infeasible activation targets are reported") {
  ConstraintProfile p;
  p.impulse = {std::nullopt, std::nullopt};
  p.groups = {ActivationGroup{{0}, 0.3, 0.0, BoundDirection::upper}, ActivationGroup{{1}, 0.3, 0.0, BoundDirection::upper}};
  CHECK_THROWS_AS(generate_signal(p, JumpGraph::complete(2), Time::parse("2"), 1, SignalStyle::periodic), GenerationError);
}

TEST_CASE("audit catches a dense switching burst") {
  const auto profile = fixture::unstable_profile();
  std::vector<Event> events;
  Mode m = 0;
  for (int k = 1; k <= 10; ++k) {
    m = 1 - m;
    events.push_back({Time::from_ticks(k * 1'000'000), EventKind::mode_switch, m});
  }
  const HybridSignal s(0, events, Time::parse("1"));
  const auto audit = audit_signal(s, profile, fixture::unstable_system().graph);
  CHECK_FALSE(audit.passed());
  CHECK(audit.min_slack() < 0.0);
}

TEST_CASE("zero flow keeps the state between events") {
  SwitchedImpulsiveSystem sys;
  sys.dimension = 2;
  sys.flows = {FlowMap{Matrix::Zero(2, 2), std::nullopt}};
  sys.graph = JumpGraph(1, {});
  sys.self_jumps = {Matrix::Identity(2, 2)};
  Vector x0(2);
  x0 << 1.5, -2.0;
  const auto tr = simulate(sys, HybridSignal(0, {}, Time::parse("1")), x0, Time{}, 0.01);
  for (const auto& s : tr.samples) CHECK((s.x - x0).norm() == 0.0);
}

TEST_CASE("linear flow matches the closed-form exponential") {
  SwitchedImpulsiveSystem sys = fixture::unstable_system();
  const HybridSignal s(0, {{Time::parse("0.5"), EventKind::mode_switch, 1}}, Time::parse("0.8"));
  Vector x0(2);
  x0 << 1.0, -1.0;
  const auto tr = simulate(sys, s, x0, Time{}, 0.01);
  for (const auto& smp : tr.samples) {
    Vector ref;
    if (smp.t < 0.5 || (smp.t == 0.5 && smp.side == SampleSide::pre_event)) {
      ref = oracle::expm_2x2(fixture::a1(), smp.t) * x0;
    } else {
      ref = oracle::expm_2x2(fixture::a2(), smp.t - 0.5) * fixture::j_large() * oracle::expm_2x2(fixture::a1(), 0.5) * x0;
    }
    CHECK((smp.x - ref).norm() <= 1e-10 * std::max(1.0, ref.norm()));
  }
}

TEST_CASE("halving the step leaves linear samples unchanged") {
  const auto sys = fixture::unstable_system();
  const auto s = generate_signal(lower_branch_profile(), sys.graph, Time::parse("1"), 3, SignalStyle::periodic);
  const Vector x0 = Vector::Ones(2);
  const auto coarse = simulate(sys, s, x0, Time{}, 1e-3);
  const auto fine = simulate(sys, s, x0, Time{}, 5e-4);
  for (const auto& c : coarse.samples) {
    if (c.side != SampleSide::flow) continue;
    const auto& f = sample_at(fine, c.t, SampleSide::flow);
    CHECK((c.x - f.x).norm() <= 1e-12 * std::max(1.0, c.x.norm()));
  }
}

TEST_CASE("fourth-order convergence on the perturbed flow") {
  const auto spec = load_spec(fixture::data_path("two_mode_perturbed.json"));
  const HybridSignal s(0, {{Time::parse("0.4"), EventKind::mode_switch, 1}}, Time::parse("0.6"));
  const Vector x0 = Vector::Ones(2);
  const auto endpoint = [&](double h) { return simulate(spec.system, s, x0, Time{}, h).samples.back().x; };
  const Vector ref = endpoint(0.02 / 16);
  const double e1 = (endpoint(0.02) - ref).norm();
  const double e2 = (endpoint(0.01) - ref).norm();
  REQUIRE(e2 > 0.0);
  const double order = std::log2(e1 / e2);
  CHECK(order > 3.5);
  CHECK(order < 4.5);
}

TEST_CASE("jumps act on the left limit and restarts coincide") {
  const auto sys = fixture::unstable_system();
  const auto s = generate_signal(lower_branch_profile(), sys.graph, Time::parse("1"), 11, SignalStyle::randomized);
  const Vector x0 = Vector::Ones(2);
  const auto tr = simulate(sys, s, x0, Time{}, 1e-3);
  for (std::size_t k = 0; k + 1 < tr.samples.size(); ++k) {
    const auto& pre = tr.samples[k];
    if (pre.side != SampleSide::pre_event) continue;
    const auto& post = tr.samples[k + 1];
    REQUIRE(post.side == SampleSide::post_event);
    CHECK((post.x - sys.jump(pre.mode, post.mode) * pre.x).norm() == 0.0);
  }
  REQUIRE(s.events().size() > 2);
  const Event& e = s.events()[s.events().size() / 2];
  const Vector xe = sample_at(tr, e.time.units(), SampleSide::post_event).x;
  const auto restarted = simulate(sys, s, xe, e.time, 1e-3);
  const double scale = std::max(1.0, x0.norm());
  for (const auto& r : restarted.samples) {
    if (r.side == SampleSide::flow && r.t > e.time.units()) {
      const auto& o = sample_at(tr, r.t, SampleSide::flow);
      CHECK((r.x - o.x).norm() <= 1e-10 * std::max(scale, o.x.norm()));
    }
  }
}

TEST_CASE("discrete embedding reproduces the step product") {
  const std::vector<Matrix> maps{0.5 * Matrix::Identity(2, 2), fixture::mat2(0.0, 1.0, -0.8, 0.3)};
  {
    const std::vector<Mode> schedule(6, 0);
    const auto emb = from_discrete_switched(maps, schedule);
    const auto tr = simulate(emb.system, emb.signal, Vector::Ones(2), Time{}, 0.1);
    CHECK((tr.samples.back().x - std::pow(0.5, 6) * Vector::Ones(2)).norm() < 1e-15);
  }
  const std::vector<Mode> schedule{0, 1, 1, 0, 1, 0, 0, 1};
  const auto emb = from_discrete_switched(maps, schedule);
  Vector x0(2);
  x0 << 0.3, -1.2;
  const auto tr = simulate(emb.system, emb.signal, x0, Time{}, 0.1);
  CHECK((tr.samples.back().x - oracle::step_product(maps, schedule, x0)).norm() < 1e-14);
}

TEST_CASE("bound ratio at a zero horizon and at the origin") {
  const auto lyap = fixture::unstable_lyapunov();
  const auto graph = WeightedJumpGraph::from_lyapunov(fixture::unstable_system().graph, lyap);
  const auto cert = certify_main(lyap, graph, fixture::unstable_profile(), CertConfig{2, 0.6, {0.8, 2.3}});
  const auto sys = fixture::unstable_system();
  const HybridSignal empty(0, {}, Time{});
  const auto tr = simulate(sys, empty, Vector::Ones(2), Time{}, 1e-3);
  REQUIRE(tr.samples.size() == 1);
  CHECK_THAT(verify_bound(tr, cert).max_ratio, WithinRel(1.0 / cert.k, 1e-12));
  const auto s = generate_signal(lower_branch_profile(), sys.graph, Time::parse("1"), 2, SignalStyle::periodic);
  CHECK(verify_bound(simulate(sys, s, Vector::Zero(2), Time{}, 1e-3), cert).max_ratio == 0.0);
}

TEST_CASE("simulate rejects steps coarser than the event spacing") {
  const auto sys = fixture::unstable_system();
  const HybridSignal s(0, {{Time::parse("0.5"), EventKind::mode_switch, 1}, {Time::parse("0.51"), EventKind::mode_switch, 0}},
                       Time::parse("1"));
  CHECK_THROWS_AS(simulate(sys, s, Vector::Ones(2), Time{}, 0.005), std::invalid_argument);
  CHECK_NOTHROW(simulate(sys, s, Vector::Ones(2), Time{}, 0.0025));
}

TEST_CASE("simulation is deterministic") {
  const auto sys = fixture::unstable_system();
  const auto s = generate_signal(lower_branch_profile(), sys.graph, Time::parse("2"), 5, SignalStyle::randomized);
  const auto a = simulate(sys, s, Vector::Ones(2), Time{}, 1e-3);
  const auto b = simulate(sys, s, Vector::Ones(2), Time{}, 1e-3);
  CHECK(max_sample_gap(a, b) == 0.0);
}

TEST_CASE("functional check stays within the comparison budget") {
  const auto lyap = fixture::unstable_lyapunov();
  const auto sys = fixture::unstable_system();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto s = generate_signal(lower_branch_profile(), sys.graph, Time::parse("2"), seed, SignalStyle::periodic);
    CHECK(lyapunov_functional_check(simulate(sys, s, Vector::Ones(2), Time{}, 1e-3), lyap).max_ratio <= 1.0 + 1e-9);
  }
}

TEST_CASE("theta deficit cases") {
  const HybridSignal s(0, {{Time::parse("1"), EventKind::mode_switch, 1}, {Time::parse("3"), EventKind::mode_switch, 0}},
                       Time::parse("2") + Time::parse("2"));
  const std::vector<ThetaCoefficient> small{{0.001, Harmonic::sine}, {0.005, Harmonic::cosine}};
  CHECK(theta_deficit(small, 0.012, s, 1e-3).total() == 0.0);

  // Without a threshold the integral is exact for the trapezoid rule up to O(h^2).
  const auto full = theta_deficit(small, 0.0, s, 1e-4);
  const double ref = 0.001 * (1.0 + (1.0 - std::cos(1.0))) + 0.005 * (2.0 + std::sin(3.0) - std::sin(1.0)) +
                     0.001 * (1.0 + std::cos(3.0) - std::cos(4.0));
  CHECK_THAT(full.integral, WithinRel(ref, 1e-7));
  CHECK(full.event_sum > 0.0);

  const std::vector<ThetaCoefficient> big{{0.01, Harmonic::sine}, {0.005, Harmonic::cosine}};
  const auto pos = theta_deficit(big, 0.012, s, 1e-3);
  CHECK(pos.total() > 0.0);
  // Mode 1 alone over [0, 4]: positive exactly where sin t > 0.2.
  const double lo = std::asin(0.2), hi = std::numbers::pi - lo;
  const double direct = 0.01 * (std::cos(lo) - std::cos(hi)) - 0.002 * (hi - lo);
  CHECK_THAT(pos.per_mode_integral[0], WithinRel(direct, 1e-5));
}
