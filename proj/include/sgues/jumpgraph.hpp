#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "sgues/lyapunov.hpp"
#include "sgues/model.hpp"

namespace sgues {

inline constexpr std::size_t kMaxWalkLength = 1'000'000;
inline constexpr std::size_t kMaxEnumerationLength = 12;
inline constexpr std::size_t kMaxEnumerationModes = 8;

// Switch graph with log gains; absent edges carry -inf.
class WeightedJumpGraph {
 public:
  // gains(i, j) is read for every graph edge and must be positive and finite.
  WeightedJumpGraph(JumpGraph graph, const Matrix& gains);
  static WeightedJumpGraph from_lyapunov(const JumpGraph& graph, const LyapunovData& data);

  const JumpGraph& graph() const { return graph_; }
  const Matrix& log_weights() const { return log_weights_; }
  std::size_t mode_count() const { return graph_.mode_count(); }

 private:
  JumpGraph graph_;
  Matrix log_weights_;
};

// (max, +) product; -inf is the additive zero.
Matrix max_plus_product(const Matrix& a, const Matrix& b);
// Identity has 0 on the diagonal and -inf elsewhere.
Matrix max_plus_identity(std::size_t n);
// Power by repeated squaring.
Matrix max_plus_power(const Matrix& a, std::size_t exponent);

// ln R(L); nullopt encodes `no-walk`. L = 0 yields 0. Throws above kMaxWalkLength.
std::optional<double> combined_log_weight(const WeightedJumpGraph& graph, std::size_t length);
std::optional<double> combined_weight(const WeightedJumpGraph& graph, std::size_t length);

// ln R(l) for l = 0..max_length, each entry nullopt when no walk exists.
std::vector<std::optional<double>> combined_log_weight_table(const WeightedJumpGraph& graph, std::size_t max_length);

// ln of max_{0 <= l < L} R(l). Throws for L = 0.
double hat_combined_log_weight(const WeightedJumpGraph& graph, std::size_t length);
double hat_combined_weight(const WeightedJumpGraph& graph, std::size_t length);

// Exhaustive walk enumeration in linear space; a test oracle for combined_weight.
// Throws std::invalid_argument beyond kMaxEnumerationLength / kMaxEnumerationModes.
std::optional<double> brute_force_combined_weight(const WeightedJumpGraph& graph, std::size_t length);

}  // namespace sgues
