#pragma once

#include <Eigen/Dense>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sgues/time.hpp"

namespace sgues {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Mode indices are 0-based in memory and 1-based in every document.
using Mode = std::size_t;

struct Edge {
  Mode from = 0;
  Mode to = 0;
  auto operator<=>(const Edge&) const = default;
};

// Admissible switches. Self-loops are implicit: every mode owns a
// nonswitching jump map (possibly the identity) held by the system.
class JumpGraph {
 public:
  JumpGraph() = default;
  JumpGraph(std::size_t mode_count, std::vector<Edge> edges);
  static JumpGraph complete(std::size_t mode_count);

  std::size_t mode_count() const { return mode_count_; }
  const std::vector<Edge>& edges() const { return edges_; }
  bool has_edge(Mode from, Mode to) const;
  std::vector<Mode> successors(Mode mode) const;

 private:
  std::size_t mode_count_ = 0;
  std::vector<Edge> edges_;  // sorted, unique
};

enum class Harmonic { none, sine, cosine };

// Perturbation of magnitude
//   a (1 + h(t)) |x| + (b |x| + c) u^2 + d u
// added along a fixed direction; vanishes at the origin whenever u = 0.
struct AbsAffinePerturbation {
  double state_gain = 0.0;            // a
  Harmonic harmonic = Harmonic::none;  // h
  double input_sq_state_gain = 0.0;   // b
  double input_sq_gain = 0.0;         // c
  double input_gain = 0.0;            // d
  Vector direction;                   // empty means all ones

  double magnitude(double t, double state_norm, double input) const;
};

struct FlowMap {
  Matrix a;
  std::optional<AbsAffinePerturbation> perturbation;

  bool is_linear() const { return !perturbation.has_value(); }
  Vector eval(double t, const Vector& x, double input) const;
};

struct SwitchedImpulsiveSystem {
  std::size_t dimension = 0;
  std::vector<FlowMap> flows;
  JumpGraph graph;
  std::map<Edge, Matrix> switch_jumps;  // keyed by graph edge
  std::vector<Matrix> self_jumps;       // one per mode; identity when impulses have no effect

  std::size_t mode_count() const { return flows.size(); }
  bool is_linear() const;
  // Jump map for (from, to); from == to selects the self jump. Throws when absent.
  const Matrix& jump(Mode from, Mode to) const;
  bool self_jump_is_identity(Mode mode) const;
};

enum class BoundDirection { upper, lower };

struct ImpulseAdt {
  double n0 = 1.0;
  double t_j = 1.0;  // may be +inf
  BoundDirection direction = BoundDirection::upper;
};

struct AdtPair {
  double n0 = 1.0;
  double period = 1.0;  // may be +inf on the lower branch
};

struct SwitchingAdt {
  std::optional<AdtPair> upper;
  std::optional<AdtPair> lower;
};

struct ActivationGroup {
  std::vector<Mode> modes;
  double n_a = 0.0;
  double t_a = 0.0;
  BoundDirection direction = BoundDirection::upper;
};

struct ConstraintProfile {
  std::vector<std::optional<ImpulseAdt>> impulse;  // indexed by mode
  SwitchingAdt switching;
  std::vector<ActivationGroup> groups;
  bool self_impulses = true;  // false declares mu empty
};

enum class EventKind { mode_switch, self_impulse };

struct Event {
  Time time;
  EventKind kind = EventKind::mode_switch;
  Mode mode = 0;  // active mode right after the event
};

// Right-continuous mode signal on [0, horizon] with a finite event log.
class HybridSignal {
 public:
  HybridSignal() = default;
  // Throws std::invalid_argument unless event times are strictly increasing in
  // (0, horizon], switches change the mode and impulses keep it.
  HybridSignal(Mode initial_mode, std::vector<Event> events, Time horizon);

  Mode initial_mode() const { return initial_mode_; }
  const std::vector<Event>& events() const { return events_; }
  Time horizon() const { return horizon_; }

  Mode mode_at(Time t) const;
  Mode mode_before(Time t) const;  // nu(t^-); equals mode_at(t) off events
  // Index of the first event with time > t.
  std::size_t first_event_after(Time t) const;
  // Empty when every switch follows an edge of the graph.
  std::vector<std::string> graph_violations(const JumpGraph& graph) const;

 private:
  Mode initial_mode_ = 0;
  std::vector<Event> events_;
  Time horizon_;
};

struct SignalCounters {
  std::int64_t switches = 0;
  std::int64_t impulses = 0;
  std::vector<std::int64_t> impulses_per_mode;
  std::vector<Time> activation;  // exact; sums to t - t0

  std::int64_t events() const { return switches + impulses; }
  double activation_units(Mode mode) const { return activation[mode].units(); }
};

// Counts over (t0, t]. Throws std::invalid_argument when t < t0 or t0 < 0.
SignalCounters signal_counters(const HybridSignal& signal, std::size_t mode_count, Time t0, Time t);

enum class Severity { error, warning };

struct Issue {
  Severity severity = Severity::error;
  std::string code;
  std::string path;  // JSON pointer into the spec document
  std::string message;
};

using ValidationReport = std::vector<Issue>;

ValidationReport validate_system(const SwitchedImpulsiveSystem& system, const ConstraintProfile& profile);
bool has_errors(const ValidationReport& report);

struct DiscreteEmbedding {
  SwitchedImpulsiveSystem system;
  HybridSignal signal;
};

// Embeds x(k+1) = h_{schedule[k]} x(k) as a jump-only system with unit event spacing.
DiscreteEmbedding from_discrete_switched(std::span<const Matrix> step_maps, std::span<const Mode> schedule);

}  // namespace sgues
