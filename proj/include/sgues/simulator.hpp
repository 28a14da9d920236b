#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sgues/certifier.hpp"
#include "sgues/lyapunov.hpp"
#include "sgues/model.hpp"
#include "sgues/staircase.hpp"

namespace sgues {

enum class BoundKind { switching, impulse, activation, no_self_impulse };

// One inequality of the constraint profile written as a staircase bound.
struct ProfileBound {
  std::string name;
  BoundKind kind = BoundKind::switching;
  std::size_t subject = 0;  // mode for impulse bounds, group index for activation bounds
  Staircase f;
  BoundDirection direction = BoundDirection::upper;
  double limit = 0.0;
};

std::vector<ProfileBound> profile_bounds(const ConstraintProfile& profile, std::size_t mode_count);

enum class SignalStyle { periodic, randomized };

struct GeneratorOptions {
  Time min_gap = Time::from_ticks(5'000'000);  // 0.005
  double mean_gap = 0.04;
  double deadline_fraction = 0.9;
  int max_attempts = 40;
  std::optional<Mode> initial_mode;
};

// Constructive scheduler; the result passes audit_signal. Throws GenerationError
// when no admissible signal is found within the attempt budget.
HybridSignal generate_signal(const ConstraintProfile& profile, const JumpGraph& graph, Time horizon,
                             std::uint64_t seed, SignalStyle style, const GeneratorOptions& options = {});

struct InequalityAudit {
  std::string name;
  BoundDirection direction = BoundDirection::upper;
  double limit = 0.0;
  IncrementExtreme extreme;  // worst increment and the pair attaining it
  double slack = 0.0;        // negative on violation
};

struct AuditReport {
  std::vector<InequalityAudit> items;
  std::vector<std::string> graph_violations;

  bool passed(double tolerance = 1e-9) const;
  double min_slack() const;
};

AuditReport audit_signal(const HybridSignal& signal, const ConstraintProfile& profile, std::size_t mode_count);
AuditReport audit_signal(const HybridSignal& signal, const ConstraintProfile& profile, const JumpGraph& graph);

enum class InputKind { zero, constant, sinusoid };

struct InputSignal {
  InputKind kind = InputKind::zero;
  double amplitude = 0.0;
  double frequency = 1.0;  // rad per time unit
  double phase = 0.0;

  double at(double t) const;
};

enum class SampleSide { flow, pre_event, post_event };

struct TrajectorySample {
  double t = 0.0;
  Vector x;
  Mode mode = 0;
  SampleSide side = SampleSide::flow;
  std::int64_t switches = 0;  // over (t0, t]
  std::int64_t impulses = 0;

  std::int64_t events() const { return switches + impulses; }
};

struct HybridTrajectory {
  HybridSignal signal;
  Time t0;
  Vector x0;
  std::vector<TrajectorySample> samples;
  bool diverged = false;
};

inline constexpr double kDivergenceNorm = 1e300;

// Linear flows: exact matrix exponential from each segment start. Perturbed
// flows: classical RK4 with steps aligned to events. Events at or before t0 are
// not applied. Throws std::invalid_argument when step exceeds a quarter of the
// smallest inter-event gap.
HybridTrajectory simulate(const SwitchedImpulsiveSystem& system, const HybridSignal& signal, const Vector& x0,
                          Time t0, double step, const InputSignal& input = {});

struct RatioReport {
  double max_ratio = 0.0;
  std::size_t index = 0;  // sample attaining the maximum
};

// max |x(t)| / beta(|x0|, t - t0 + n(t, t0)); 0 when x0 = 0.
RatioReport verify_bound(const HybridTrajectory& trajectory, const CombinedBound& bound);
RatioReport verify_bound(const HybridTrajectory& trajectory, const Certificate& cert);

// max w(t) / (exp(sum_i lambda_bar(i) t_a(i) + sum of ln r_bar over events) w(t0)), w = V_nu(x).
RatioReport lyapunov_functional_check(const HybridTrajectory& trajectory, const LyapunovData& lyap);

struct ThetaCoefficient {
  double gain = 0.0;  // a_i in a_i (1 + h(t)) |x|
  Harmonic harmonic = Harmonic::none;
};

struct ThetaDeficit {
  double integral = 0.0;   // of theta along the active mode
  double event_sum = 0.0;  // theta of the active mode at event times
  std::vector<double> per_mode_integral;  // of each theta^i over [0, horizon]

  double total() const { return integral + event_sum; }
};

// theta^i(t) = max{a_i (1 + h_i(t)) - n_tilde, 0}, integrated with the trapezoid rule.
ThetaDeficit theta_deficit(std::span<const ThetaCoefficient> coefficients, double n_tilde, const HybridSignal& signal,
                           double grid_step);

}  // namespace sgues
