#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sgues/model.hpp"

namespace sgues {

inline constexpr double kSpectralTolerance = 1e-9;

// Max real part of the spectrum below -kSpectralTolerance.
bool is_hurwitz(const Matrix& a);
// Spectral radius below 1 - kSpectralTolerance.
bool is_schur(const Matrix& j);

// A^T P + P A = -Q. Throws InputError unless A is Hurwitz and Q symmetric.
Matrix solve_continuous_lyapunov(const Matrix& a, const Matrix& q);
// J^T P J - P = -Q. Throws InputError unless J is Schur and Q symmetric.
Matrix solve_discrete_lyapunov(const Matrix& j, const Matrix& q);

struct PencilExtremes {
  double min = 0.0;
  double max = 0.0;
};

// Extreme roots of det(Q - lambda P) = 0 for symmetric Q and P > 0.
PencilExtremes generalized_eig_extremes(const Matrix& q, const Matrix& p);

enum class LyapunovClass { continuous, discrete, user };

struct ModeClassification {
  std::vector<LyapunovClass> classes;  // indexed by mode
};

// Hurwitz flow -> continuous; else Schur self jump -> discrete; else user.
// When both apply, the class giving the smaller lambda_i(1) wins if the
// profile carries T_J for the mode; otherwise discrete when its self gain < 1.
ModeClassification auto_classify(const SwitchedImpulsiveSystem& system, const ConstraintProfile* profile);

struct LyapunovData {
  int exponent = 2;
  std::vector<Matrix> p;        // empty for scalar-only user data
  std::vector<Matrix> q_tilde;  // 0x0 on continuous-class modes
  std::vector<double> k_lower;
  std::vector<double> k_upper;
  std::vector<double> lambda_bar;
  Matrix r_bar;  // r_bar(i, j); NaN where no jump map exists
  std::optional<ModeClassification> classification;

  std::size_t mode_count() const { return lambda_bar.size(); }
  bool has_gain(Mode from, Mode to) const;
  double gain(Mode from, Mode to) const;  // throws when absent
  double self_gain(Mode mode) const { return gain(mode, mode); }
  // Throws InputError on shape or positivity violations.
  void check_consistency(const JumpGraph& graph) const;
};

// Per-mode quadratic data for the linear part of the system (perturbations are ignored).
// q_choices default to the identity; p_choices are mandatory for user-class modes.
LyapunovData synthesize(const SwitchedImpulsiveSystem& system, const ModeClassification& classification,
                        const std::map<Mode, Matrix>& q_choices, const std::map<Mode, Matrix>& p_choices);

struct AssumptionSampleReport {
  double worst_flow_excess = -1.0;  // max over samples of 2x'PAx - lambda_bar x'Px
  double worst_jump_excess = -1.0;  // max of V_j(Jx) - r_bar V_i(x)
  double worst_sandwich_excess = -1.0;
  std::size_t samples = 0;
  bool holds = false;
  std::string detail;
};

// Pointwise check of the three Lyapunov inequalities on random unit states.
// Requires quadratic data (p populated). Excess values are relative to V_i(x).
AssumptionSampleReport sample_assumption_check(const SwitchedImpulsiveSystem& system, const LyapunovData& data,
                                               std::size_t samples_per_map, std::uint64_t seed,
                                               double tolerance = 1e-9);

}  // namespace sgues
