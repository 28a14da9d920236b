#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sgues/jumpgraph.hpp"
#include "sgues/lyapunov.hpp"
#include "sgues/model.hpp"
#include "sgues/staircase.hpp"

namespace sgues {

enum class StabilityTarget { stable, unstable };
enum class Theorem { main, no_self_impulses };

struct CertConfig {
  std::size_t length = 1;  // L
  double c_s = 0.0;
  std::vector<double> c;   // per mode; ignored by the no-self-impulse theorem
};

struct ModePartition {
  std::vector<Mode> unstable;       // lambda_i(1) >= 0
  std::vector<Mode> stable;         // lambda_i(1) < 0
  std::vector<double> rate_at_one;  // lambda_i(1), by mode
};

// T_J of every mode with a non-neutral self gain must be present in the profile;
// modes without one are treated as T_J = +inf.
ModePartition mode_partition(const LyapunovData& lyap, const ConstraintProfile& profile);

struct OpenInterval {
  double lo = 0.0;
  double hi = 0.0;  // may be +inf
  bool contains(double v) const { return v > lo && v < hi; }
};

// Coefficients c keeping r_i(c) < 0 with lambda_i(c) of the targeted sign.
// nullopt when the self gain is exactly 1. Throws std::invalid_argument when the
// target disagrees with the sign of lambda_i(1).
std::optional<OpenInterval> admissible_c_interval(double lambda_bar, double r_self, double t_j, StabilityTarget target);

// lambda_i(c) = lambda_bar + c ln(r_self) / T_J, with s / inf = 0.
double mode_flow_rate(double lambda_bar, double r_self, double t_j, double c);
// r_i(c) = (1 - c) ln(r_self).
double mode_jump_rate(double r_self, double c);

struct SwitchingRates {
  double lambda_s = 0.0;
  double r_s = 0.0;
  double t_s = 0.0;
  double n_s = 0.0;
  BoundDirection branch = BoundDirection::upper;  // upper when R(L) >= 1
};

// Takes ln R(L). Throws CertificationError when the profile lacks the pair the branch needs.
SwitchingRates switching_rates(double log_combined_weight, std::size_t length, const ConstraintProfile& profile,
                               double c_s);

struct Certificate {
  Theorem theorem = Theorem::main;
  CertConfig config;
  int exponent = 2;
  double log_r_l = 0.0;    // ln R(L)
  double log_hat_r = 0.0;  // ln of max_{l < L} R(l)
  SwitchingRates switching;
  std::vector<double> mode_lambda;  // lambda_i(c_i)
  std::vector<double> mode_r;       // r_i(c_i)
  double lambda_j = 0.0;
  std::optional<double> r_j;        // absent when every self gain is neutral
  double c0 = 0.0;
  double c1 = 0.0;
  double c = 0.0;
  double lambda0 = 0.0;
  double k = 0.0;
  double lambda = 0.0;
  bool valid = false;
  bool hypotheses_met = false;
  std::vector<std::string> diagnostics;
};

// Certificate with self impulses. Throws CertificationError on `no-walk` at L,
// missing constraint data, or direction flags inconsistent with the Lyapunov data.
Certificate certify_main(const LyapunovData& lyap, const WeightedJumpGraph& graph, const ConstraintProfile& profile,
                         const CertConfig& config);

// Certificate when no nonswitching impulses occur (c_s in [0, 1)).
Certificate certify_no_self_impulses(const LyapunovData& lyap, const WeightedJumpGraph& graph,
                                     const ConstraintProfile& profile, const CertConfig& config);

// Routes to certify_no_self_impulses when the profile declares no self impulses.
Certificate certify(const LyapunovData& lyap, const WeightedJumpGraph& graph, const ConstraintProfile& profile,
                    const CertConfig& config);

struct IncrementCheck {
  bool holds = false;
  double worst_slack = 0.0;  // limit minus worst increment
  IncrementExtreme worst;
};

// Condition on (t0, t) pairs:
//   lambda_s dt + r_s n_nu + sum_i [lambda_i t_a(i) + r_i n(i)] <= C0 - lambda0 (dt + n).
IncrementCheck check_h3(const Certificate& cert, const HybridSignal& signal, double c0, double lambda0,
                        double tolerance = 1e-9);

// Comparison condition on the raw Lyapunov data:
//   sum_i lambda_bar(i) t_a(i) + sum over events of ln r_bar <= C - lambda0 (dt + n).
IncrementCheck check_comparison_condition(const LyapunovData& lyap, const HybridSignal& signal, double c,
                                          double lambda0, double tolerance = 1e-9);

struct Envelope {
  double k = 1.0;
  double lambda = 0.0;
};

// beta(r, s) = min_k K_k exp(-lambda_k s) r.
class CombinedBound {
 public:
  explicit CombinedBound(std::vector<Envelope> envelopes);

  const std::vector<Envelope>& envelopes() const { return envelopes_; }
  double log_value(double r, double s) const;
  double value(double r, double s) const;
  std::size_t active_index(double s) const;
  // Some envelope decays.
  bool decaying() const;
  // Smallest nonincreasing majorant sup_{s' >= s} beta(r, s'); +inf when nothing decays.
  double monotone_value(double r, double s) const;

 private:
  std::vector<Envelope> envelopes_;
};

// Throws std::invalid_argument on an empty list.
CombinedBound combined_bound(std::span<const Certificate> certs);

// s where K_a e^{-lambda_a s} = K_b e^{-lambda_b s}; nullopt for parallel envelopes.
std::optional<double> crossover(const Envelope& a, const Envelope& b);

// lambda / (K e^lambda).
double iiss_margin(double k, double lambda);
// Throws CertificationError on an invalid certificate.
double iiss_margin(const Certificate& cert);

enum class SweepObjective { max_lambda, min_k };

struct SweepGrid {
  std::vector<std::size_t> lengths;
  std::vector<double> c_s_values;              // empty: default grid per length
  std::vector<std::vector<double>> c_values;   // per mode; empty entry: default grid
  std::vector<double> extra_c_s;               // merged into default c_s grids
  std::vector<std::vector<double>> extra_c;    // merged into default c grids, per mode
  bool refine = false;                         // golden-section polish of c_s on the winner
  std::size_t max_points = 2'000'000;
};

struct SweepResult {
  Certificate best;
  bool found_valid = false;
  std::size_t evaluated = 0;
  std::vector<std::size_t> skipped_lengths;  // `no-walk` lengths
};

// Default per-mode coefficient grid: 20 log-spaced points inside the admissible interval.
std::vector<double> default_c_grid(const LyapunovData& lyap, const ConstraintProfile& profile, Mode mode);
// Default c_s grid for a length whose combined log weight is `log_r_l`.
std::vector<double> default_c_s_grid(Theorem theorem, double log_r_l);

// Deterministic scan; ties broken by smaller L, then smaller c_s, then lexicographic c.
// Throws CertificationError when every length is `no-walk`.
SweepResult sweep(const LyapunovData& lyap, const WeightedJumpGraph& graph, const ConstraintProfile& profile,
                  const SweepGrid& grid, SweepObjective objective);

}  // namespace sgues
