#include "sgues/jumpgraph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "sgues/errors.hpp"

namespace sgues {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::optional<double> max_entry(const Matrix& m) {
  if (m.size() == 0) return std::nullopt;
  const double v = m.maxCoeff();
  if (v == kNegInf) return std::nullopt;
  return v;
}

}  // namespace

WeightedJumpGraph::WeightedJumpGraph(JumpGraph graph, const Matrix& gains) : graph_(std::move(graph)) {
  const auto n = static_cast<Eigen::Index>(graph_.mode_count());
  if (gains.rows() < n || gains.cols() < n) throw std::invalid_argument("gain table smaller than the graph");
  log_weights_ = Matrix::Constant(n, n, kNegInf);
  for (const Edge& e : graph_.edges()) {
    if (e.from >= graph_.mode_count() || e.to >= graph_.mode_count() || e.from == e.to)
      throw std::invalid_argument("graph edge out of range or self loop");
    const double g = gains(static_cast<Eigen::Index>(e.from), static_cast<Eigen::Index>(e.to));
    if (!(g > 0.0) || !std::isfinite(g)) throw InputError("switch gains must be positive and finite");
    log_weights_(static_cast<Eigen::Index>(e.from), static_cast<Eigen::Index>(e.to)) = std::log(g);
  }
}

WeightedJumpGraph WeightedJumpGraph::from_lyapunov(const JumpGraph& graph, const LyapunovData& data) {
  return WeightedJumpGraph(graph, data.r_bar);
}

Matrix max_plus_identity(std::size_t n) {
  const auto k = static_cast<Eigen::Index>(n);
  Matrix id = Matrix::Constant(k, k, kNegInf);
  id.diagonal().setZero();
  return id;
}

Matrix max_plus_product(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("max-plus shape mismatch");
  Matrix out = Matrix::Constant(a.rows(), b.cols(), kNegInf);
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == kNegInf) continue;
      for (Eigen::Index j = 0; j < b.cols(); ++j) {
        const double bkj = b(k, j);
        if (bkj == kNegInf) continue;
        out(i, j) = std::max(out(i, j), aik + bkj);
      }
    }
  return out;
}

Matrix max_plus_power(const Matrix& a, std::size_t exponent) {
  if (a.rows() != a.cols()) throw std::invalid_argument("max-plus power needs a square matrix");
  Matrix result = max_plus_identity(static_cast<std::size_t>(a.rows()));
  Matrix base = a;
  while (exponent > 0) {
    if (exponent & 1u) result = max_plus_product(result, base);
    exponent >>= 1u;
    if (exponent > 0) base = max_plus_product(base, base);
  }
  return result;
}

std::optional<double> combined_log_weight(const WeightedJumpGraph& graph, std::size_t length) {
  if (length > kMaxWalkLength) throw std::invalid_argument("walk length exceeds the supported maximum of 1e6");
  if (length == 0) return 0.0;
  return max_entry(max_plus_power(graph.log_weights(), length));
}

std::optional<double> combined_weight(const WeightedJumpGraph& graph, std::size_t length) {
  const auto lw = combined_log_weight(graph, length);
  if (!lw) return std::nullopt;
  return std::exp(*lw);
}

std::vector<std::optional<double>> combined_log_weight_table(const WeightedJumpGraph& graph, std::size_t max_length) {
  if (max_length > kMaxWalkLength) throw std::invalid_argument("walk length exceeds the supported maximum of 1e6");
  std::vector<std::optional<double>> table;
  table.reserve(max_length + 1);
  table.push_back(0.0);
  Matrix power = max_plus_identity(graph.mode_count());
  for (std::size_t l = 1; l <= max_length; ++l) {
    power = max_plus_product(power, graph.log_weights());
    table.push_back(max_entry(power));
  }
  return table;
}

double hat_combined_log_weight(const WeightedJumpGraph& graph, std::size_t length) {
  if (length == 0) throw std::invalid_argument("hat combined weight needs L >= 1");
  const auto table = combined_log_weight_table(graph, length - 1);
  double best = 0.0;  // R(0) = 1
  for (const auto& v : table)
    if (v) best = std::max(best, *v);
  return best;
}

double hat_combined_weight(const WeightedJumpGraph& graph, std::size_t length) {
  return std::exp(hat_combined_log_weight(graph, length));
}

std::optional<double> brute_force_combined_weight(const WeightedJumpGraph& graph, std::size_t length) {
  const std::size_t n = graph.mode_count();
  if (length > kMaxEnumerationLength || n > kMaxEnumerationModes)
    throw std::invalid_argument("enumeration bounds exceeded (L <= 12, N <= 8)");
  if (length == 0) return 1.0;
  std::vector<std::vector<std::pair<Mode, double>>> out_edges(n);
  for (const Edge& e : graph.graph().edges())
    out_edges[e.from].emplace_back(
        e.to, std::exp(graph.log_weights()(static_cast<Eigen::Index>(e.from), static_cast<Eigen::Index>(e.to))));

  std::optional<double> best;
  // Explicit DFS stack of (mode, depth, product).
  struct Frame {
    Mode mode;
    std::size_t depth;
    double product;
  };
  std::vector<Frame> stack;
  for (Mode start = 0; start < n; ++start) stack.push_back({start, 0, 1.0});
  while (!stack.empty()) {
    const Frame f = stack.back();
    stack.pop_back();
    if (f.depth == length) {
      if (!best || f.product > *best) best = f.product;
      continue;
    }
    for (const auto& [to, w] : out_edges[f.mode]) stack.push_back({to, f.depth + 1, f.product * w});
  }
  return best;
}

}  // namespace sgues
