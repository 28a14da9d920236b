#pragma once

#include <string>

#include "sgues/jumpgraph.hpp"
#include "sgues/lyapunov.hpp"
#include "sgues/model.hpp"

namespace fixture {

using namespace sgues;

inline std::string data_path(const std::string& name) { return std::string(SGUES_DATA_DIR) + "/" + name; }

inline Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

inline Matrix a1() { return mat2(-1.4, 0.6, -0.5, -0.3); }
inline Matrix a2() { return mat2(4, 3, -1, 2); }
inline Matrix j_small() { return mat2(0.105, 0, 0, 0.11); }
inline Matrix j_large() { return 1.26 * Matrix::Identity(2, 2); }

// Two-mode example with destabilizing self impulses in mode 2.
inline SwitchedImpulsiveSystem unstable_system() {
  SwitchedImpulsiveSystem s;
  s.dimension = 2;
  s.flows = {FlowMap{a1(), std::nullopt}, FlowMap{a2(), std::nullopt}};
  s.graph = JumpGraph(2, {{0, 1}, {1, 0}});
  s.switch_jumps = {{{0, 1}, j_large()}, {{1, 0}, j_small()}};
  s.self_jumps = {j_small(), j_large()};
  return s;
}

inline ConstraintProfile unstable_profile() {
  ConstraintProfile p;
  p.impulse = {ImpulseAdt{-1.0, 0.085, BoundDirection::lower}, ImpulseAdt{1.0, 0.024, BoundDirection::upper}};
  p.switching.upper = AdtPair{1.0, 0.1};
  p.switching.lower = AdtPair{-1.0, 0.1};
  p.groups = {ActivationGroup{{1}, 0.56, 0.03, BoundDirection::upper},
              ActivationGroup{{0}, 0.44, -0.03, BoundDirection::lower}};
  return p;
}

inline LyapunovData unstable_lyapunov() {
  return synthesize(unstable_system(), ModeClassification{{LyapunovClass::discrete, LyapunovClass::user}},
                    {{0, Matrix::Identity(2, 2)}}, {{1, Matrix::Identity(2, 2)}});
}

// Same flows and switch jumps, identity self jumps, no self impulses.
inline SwitchedImpulsiveSystem impulse_free_system() {
  SwitchedImpulsiveSystem s = unstable_system();
  s.self_jumps = {Matrix::Identity(2, 2), Matrix::Identity(2, 2)};
  return s;
}

inline ConstraintProfile impulse_free_profile() {
  ConstraintProfile p = unstable_profile();
  p.impulse = {std::nullopt, std::nullopt};
  p.self_impulses = false;
  return p;
}

inline LyapunovData impulse_free_lyapunov() {
  return synthesize(impulse_free_system(), ModeClassification{{LyapunovClass::continuous, LyapunovClass::user}},
                    {{0, Matrix::Identity(2, 2)}}, {{1, Matrix::Identity(2, 2)}});
}

// Three-mode weighted graph used to motivate combined weights.
inline WeightedJumpGraph three_mode_graph() {
  Matrix g = Matrix::Zero(3, 3);
  g(0, 1) = 0.003;
  g(1, 0) = 0.274;
  g(1, 2) = 0.195;
  g(2, 0) = 1.656;
  return WeightedJumpGraph(JumpGraph(3, {{0, 1}, {1, 0}, {1, 2}, {2, 0}}), g);
}

}  // namespace fixture
