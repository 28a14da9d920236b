#include "sgues/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sgues/errors.hpp"

namespace sgues {

namespace {

std::string one_based(Mode m) { return std::to_string(m + 1); }

std::string pair_label(Mode i, Mode j) { return "(" + one_based(i) + "," + one_based(j) + ")"; }

bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace

JumpGraph::JumpGraph(std::size_t mode_count, std::vector<Edge> edges)
    : mode_count_(mode_count), edges_(std::move(edges)) {
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
}

JumpGraph JumpGraph::complete(std::size_t mode_count) {
  std::vector<Edge> edges;
  for (Mode i = 0; i < mode_count; ++i)
    for (Mode j = 0; j < mode_count; ++j)
      if (i != j) edges.push_back({i, j});
  return JumpGraph(mode_count, std::move(edges));
}

bool JumpGraph::has_edge(Mode from, Mode to) const {
  return std::binary_search(edges_.begin(), edges_.end(), Edge{from, to});
}

std::vector<Mode> JumpGraph::successors(Mode mode) const {
  std::vector<Mode> out;
  for (const Edge& e : edges_)
    if (e.from == mode) out.push_back(e.to);
  return out;
}

double AbsAffinePerturbation::magnitude(double t, double state_norm, double input) const {
  double h = 0.0;
  if (harmonic == Harmonic::sine) h = std::sin(t);
  if (harmonic == Harmonic::cosine) h = std::cos(t);
  return state_gain * (1.0 + h) * state_norm + (input_sq_state_gain * state_norm + input_sq_gain) * input * input +
         input_gain * input;
}

Vector FlowMap::eval(double t, const Vector& x, double input) const {
  Vector dx = a * x;
  if (perturbation) {
    const double mag = perturbation->magnitude(t, x.norm(), input);
    if (perturbation->direction.size() == 0) {
      dx.array() += mag;
    } else {
      dx += mag * perturbation->direction;
    }
  }
  return dx;
}

bool SwitchedImpulsiveSystem::is_linear() const {
  return std::all_of(flows.begin(), flows.end(), [](const FlowMap& f) { return f.is_linear(); });
}

const Matrix& SwitchedImpulsiveSystem::jump(Mode from, Mode to) const {
  if (from == to) {
    if (from >= self_jumps.size()) throw std::out_of_range("no self jump map for mode " + one_based(from));
    return self_jumps[from];
  }
  const auto it = switch_jumps.find(Edge{from, to});
  if (it == switch_jumps.end()) throw std::out_of_range("no jump map for edge " + pair_label(from, to));
  return it->second;
}

bool SwitchedImpulsiveSystem::self_jump_is_identity(Mode mode) const {
  const Matrix& j = jump(mode, mode);
  return j.rows() == j.cols() && j == Matrix::Identity(j.rows(), j.cols());
}

HybridSignal::HybridSignal(Mode initial_mode, std::vector<Event> events, Time horizon)
    : initial_mode_(initial_mode), events_(std::move(events)), horizon_(horizon) {
  if (horizon_ < Time{}) throw std::invalid_argument("negative horizon");
  Mode current = initial_mode_;
  Time previous{};
  for (std::size_t k = 0; k < events_.size(); ++k) {
    const Event& e = events_[k];
    if (e.time <= previous) throw std::invalid_argument("event times must be strictly increasing and positive");
    if (e.time > horizon_) throw std::invalid_argument("event beyond horizon");
    if (e.kind == EventKind::mode_switch && e.mode == current)
      throw std::invalid_argument("switch event at " + e.time.to_string() + " keeps the mode");
    if (e.kind == EventKind::self_impulse && e.mode != current)
      throw std::invalid_argument("self impulse at " + e.time.to_string() + " changes the mode");
    previous = e.time;
    current = e.mode;
  }
}

std::size_t HybridSignal::first_event_after(Time t) const {
  const auto it =
      std::upper_bound(events_.begin(), events_.end(), t, [](Time v, const Event& e) { return v < e.time; });
  return static_cast<std::size_t>(it - events_.begin());
}

Mode HybridSignal::mode_at(Time t) const {
  const std::size_t k = first_event_after(t);
  return k == 0 ? initial_mode_ : events_[k - 1].mode;
}

Mode HybridSignal::mode_before(Time t) const {
  const auto it =
      std::lower_bound(events_.begin(), events_.end(), t, [](const Event& e, Time v) { return e.time < v; });
  const std::size_t k = static_cast<std::size_t>(it - events_.begin());
  return k == 0 ? initial_mode_ : events_[k - 1].mode;
}

std::vector<std::string> HybridSignal::graph_violations(const JumpGraph& graph) const {
  std::vector<std::string> out;
  if (initial_mode_ >= graph.mode_count()) out.push_back("initial mode out of range");
  Mode current = initial_mode_;
  for (const Event& e : events_) {
    if (e.mode >= graph.mode_count()) {
      out.push_back("mode out of range at " + e.time.to_string());
    } else if (e.kind == EventKind::mode_switch && !graph.has_edge(current, e.mode)) {
      out.push_back("switch " + pair_label(current, e.mode) + " at " + e.time.to_string() + " is not a graph edge");
    }
    current = e.mode;
  }
  return out;
}

SignalCounters signal_counters(const HybridSignal& signal, std::size_t mode_count, Time t0, Time t) {
  if (t0 < Time{}) throw std::invalid_argument("t0 must be nonnegative");
  if (t < t0) throw std::invalid_argument("t must not precede t0");
  SignalCounters c;
  c.impulses_per_mode.assign(mode_count, 0);
  c.activation.assign(mode_count, Time{});
  const auto& events = signal.events();
  std::size_t k = signal.first_event_after(t0);
  Mode mode = signal.mode_at(t0);
  Time cursor = t0;
  for (; k < events.size() && events[k].time <= t; ++k) {
    const Event& e = events[k];
    c.activation.at(mode) += e.time - cursor;
    cursor = e.time;
    if (e.kind == EventKind::mode_switch) {
      ++c.switches;
    } else {
      ++c.impulses;
      ++c.impulses_per_mode.at(e.mode);
    }
    mode = e.mode;
  }
  c.activation.at(mode) += t - cursor;
  return c;
}

ValidationReport validate_system(const SwitchedImpulsiveSystem& system, const ConstraintProfile& profile) {
  ValidationReport report;
  auto error = [&](std::string code, std::string path, std::string message) {
    report.push_back({Severity::error, std::move(code), std::move(path), std::move(message)});
  };
  auto warning = [&](std::string code, std::string path, std::string message) {
    report.push_back({Severity::warning, std::move(code), std::move(path), std::move(message)});
  };

  const std::size_t n = system.dimension;
  const std::size_t modes = system.mode_count();
  if (n == 0) error("dimension", "/dimension", "dimension must be positive");
  if (modes == 0) error("modes", "/modes", "at least one mode is required");
  if (system.graph.mode_count() != modes)
    error("graph", "/edges", "jump graph mode count differs from the number of flow maps");

  auto square_n = [&](const Matrix& m) {
    return m.rows() == static_cast<Eigen::Index>(n) && m.cols() == static_cast<Eigen::Index>(n);
  };

  for (Mode i = 0; i < modes; ++i) {
    const std::string path = "/modes/" + std::to_string(i);
    const FlowMap& f = system.flows[i];
    if (!square_n(f.a)) error("dimension-mismatch", path, "flow matrix of mode " + one_based(i) + " is not n x n");
    else if (!all_finite(f.a)) error("non-finite", path, "flow matrix of mode " + one_based(i) + " has non-finite entries");
    if (f.perturbation && f.perturbation->direction.size() != 0 &&
        f.perturbation->direction.size() != static_cast<Eigen::Index>(n))
      error("dimension-mismatch", path, "perturbation direction of mode " + one_based(i) + " has wrong length");
  }

  for (const Edge& e : system.graph.edges()) {
    if (e.from >= modes || e.to >= modes) {
      error("edge-range", "/edges", "edge " + pair_label(e.from, e.to) + " has an endpoint outside 1.." + std::to_string(modes));
      continue;
    }
    if (e.from == e.to) {
      error("self-edge", "/edges", "edge " + pair_label(e.from, e.to) + " is a self loop; use self_jumps");
      continue;
    }
    const auto it = system.switch_jumps.find(e);
    if (it == system.switch_jumps.end()) {
      error("missing-jump-map", "/edges", "missing jump map for edge " + pair_label(e.from, e.to));
    } else if (!square_n(it->second)) {
      error("dimension-mismatch", "/edges", "jump map for edge " + pair_label(e.from, e.to) + " is not n x n");
    } else if (!all_finite(it->second)) {
      error("non-finite", "/edges", "jump map for edge " + pair_label(e.from, e.to) + " has non-finite entries");
    }
  }
  for (const auto& [edge, _] : system.switch_jumps)
    if (!system.graph.has_edge(edge.from, edge.to))
      warning("unused-jump-map", "/edges", "jump map " + pair_label(edge.from, edge.to) + " has no graph edge");

  if (system.self_jumps.size() != modes) {
    error("missing-jump-map", "/self_jumps", "missing jump map: one self jump per mode is required");
  } else {
    for (Mode i = 0; i < modes; ++i) {
      if (!square_n(system.self_jumps[i]))
        error("dimension-mismatch", "/self_jumps", "self jump of mode " + one_based(i) + " is not n x n");
      else if (!all_finite(system.self_jumps[i]))
        error("non-finite", "/self_jumps", "self jump of mode " + one_based(i) + " has non-finite entries");
    }
  }

  // Impulse ADT pairs.
  const std::string ipath = "/constraints/impulse_adt";
  if (profile.impulse.size() > modes) error("constraint-range", ipath, "more impulse constraints than modes");
  for (Mode i = 0; i < modes; ++i) {
    const bool present = i < profile.impulse.size() && profile.impulse[i].has_value();
    if (!present) {
      // Impulses through an identity self jump leave the state unchanged.
      const bool neutral = i < system.self_jumps.size() && system.self_jump_is_identity(i);
      if (profile.self_impulses && !neutral)
        error("missing-constraint", ipath, "no impulse dwell-time pair for mode " + one_based(i));
      continue;
    }
    const ImpulseAdt& c = *profile.impulse[i];
    if (!(c.t_j > 0.0)) error("range", ipath, "T_J of mode " + one_based(i) + " must be positive");
    if (c.direction == BoundDirection::upper && !(c.n0 >= 1.0))
      error("sign-convention", ipath, "sign convention: upper impulse bound of mode " + one_based(i) + " needs N0 >= 1");
    if (c.direction == BoundDirection::lower && !(c.n0 <= -1.0))
      error("sign-convention", ipath, "sign convention: lower impulse bound of mode " + one_based(i) + " needs N0 <= -1");
  }

  // Switching ADT.
  if (const auto& up = profile.switching.upper) {
    const std::string p = "/constraints/switching_adt/upper";
    if (!(up->n0 >= 1.0)) error("sign-convention", p, "sign convention: upper switching bound needs N0 >= 1");
    if (!(up->period > 0.0) || !std::isfinite(up->period)) error("range", p, "upper switching period must be positive and finite");
  }
  if (const auto& lo = profile.switching.lower) {
    const std::string p = "/constraints/switching_adt/lower";
    if (!(lo->n0 <= -1.0)) error("sign-convention", p, "sign convention: lower switching bound needs N0 <= -1");
    if (!(lo->period > 0.0)) error("range", p, "lower switching period must be positive");
  }

  // Activation groups.
  const std::string gpath = "/constraints/activation_groups";
  if (profile.groups.empty()) {
    warning("no-groups", gpath, "no activation groups declared; certification will be unavailable");
  } else {
    std::vector<int> seen(modes, 0);
    double sum_na = 0.0;
    double sum_ta = 0.0;
    for (std::size_t g = 0; g < profile.groups.size(); ++g) {
      const ActivationGroup& grp = profile.groups[g];
      const std::string p = gpath + "/" + std::to_string(g);
      if (grp.modes.empty()) error("partition", p, "activation group " + std::to_string(g + 1) + " is empty");
      for (Mode m : grp.modes) {
        if (m >= modes) error("partition", p, "activation group references mode " + one_based(m) + " outside range");
        else ++seen[m];
      }
      if (!(grp.n_a >= 0.0)) error("range", p, "N_a must be nonnegative");
      if (grp.direction == BoundDirection::upper && !(grp.t_a >= 0.0))
        error("sign-convention", p, "sign convention: T_a must be >= 0 on upper groups");
      if (grp.direction == BoundDirection::lower && !(grp.t_a <= 0.0))
        error("sign-convention", p, "sign convention: T_a must be <= 0 on lower groups");
      sum_na += grp.n_a;
      sum_ta += grp.t_a;
    }
    for (Mode m = 0; m < modes; ++m)
      if (seen[m] != 1)
        error("partition", gpath, "mode " + one_based(m) + " appears in " + std::to_string(seen[m]) + " activation groups");
    if (std::abs(sum_ta) > 1e-12) warning("normalization", gpath, "sum of T_a over groups is not zero");
    if (std::abs(sum_na - 1.0) > 1e-12) warning("normalization", gpath, "sum of N_a over groups is not one");
  }
  return report;
}

bool has_errors(const ValidationReport& report) {
  return std::any_of(report.begin(), report.end(), [](const Issue& i) { return i.severity == Severity::error; });
}

DiscreteEmbedding from_discrete_switched(std::span<const Matrix> step_maps, std::span<const Mode> schedule) {
  if (schedule.empty()) throw InputError("discrete schedule is empty");
  if (step_maps.empty()) throw InputError("no step maps given");
  const Eigen::Index n = step_maps.front().rows();
  for (const Matrix& h : step_maps)
    if (h.rows() != n || h.cols() != n) throw InputError("step maps must share one square shape");
  for (Mode m : schedule)
    if (m >= step_maps.size()) throw InputError("schedule references an unknown mode");

  const std::size_t modes = step_maps.size();
  SwitchedImpulsiveSystem sys;
  sys.dimension = static_cast<std::size_t>(n);
  sys.graph = JumpGraph::complete(modes);
  for (Mode i = 0; i < modes; ++i) {
    sys.flows.push_back({Matrix::Zero(n, n), std::nullopt});
    sys.self_jumps.push_back(step_maps[i]);
    for (Mode j = 0; j < modes; ++j)
      if (i != j) sys.switch_jumps.emplace(Edge{i, j}, step_maps[i]);
  }

  // The jump at integer k applies h of the mode active on [k-1, k).
  std::vector<Event> events;
  const std::size_t steps = schedule.size();
  for (std::size_t k = 1; k <= steps; ++k) {
    const Mode before = schedule[k - 1];
    const Mode after = k < steps ? schedule[k] : before;
    events.push_back({Time::from_ticks(static_cast<std::int64_t>(k) * Time::kTicksPerUnit),
                      after == before ? EventKind::self_impulse : EventKind::mode_switch, after});
  }
  HybridSignal signal(schedule.front(), std::move(events),
                      Time::from_ticks(static_cast<std::int64_t>(steps) * Time::kTicksPerUnit));
  return {std::move(sys), std::move(signal)};
}

}  // namespace sgues
