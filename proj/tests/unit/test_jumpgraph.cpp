#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "sgues/jumpgraph.hpp"

using namespace sgues;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

struct RandomGraph {
  WeightedJumpGraph graph;
  Matrix gains;
  std::vector<std::vector<bool>> edges;
};

RandomGraph random_graph(std::mt19937_64& gen, std::size_t n) {
  std::uniform_real_distribution<double> expo(-3.0, 3.0);
  std::bernoulli_distribution present(0.5);
  Matrix gains = Matrix::Zero(n, n);
  std::vector<Edge> edges;
  std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
  for (Mode i = 0; i < n; ++i)
    for (Mode j = 0; j < n; ++j)
      if (i != j && present(gen)) {
        gains(i, j) = std::exp(expo(gen));
        edges.push_back({i, j});
        adj[i][j] = true;
      }
  return {WeightedJumpGraph(JumpGraph(n, edges), gains), gains, adj};
}

}  // namespace

TEST_CASE("three-mode example weights") {
  const auto g = fixture::three_mode_graph();
  CHECK_THAT(*combined_weight(g, 1), WithinAbs(1.656, 1e-12));
  CHECK_THAT(*combined_weight(g, 2), WithinRel(0.195 * 1.656, 1e-12));
  CHECK_THAT(*combined_weight(g, 2), WithinRel(0.323, 0.01));
  CHECK(*combined_weight(g, 0) == 1.0);
  for (std::size_t l = 1; l <= 6; ++l)
    CHECK_THAT(*combined_weight(g, l), WithinRel(*brute_force_combined_weight(g, l), 1e-12));
}

TEST_CASE("two-mode example weights") {
  const auto g = WeightedJumpGraph::from_lyapunov(fixture::unstable_system().graph, fixture::unstable_lyapunov());
  CHECK_THAT(*combined_weight(g, 1), WithinRel(1.5701, 0.01));
  CHECK_THAT(*combined_weight(g, 2), WithinRel(0.0192, 0.01));
  CHECK_THAT(*combined_weight(g, 3), WithinRel(0.0302, 0.01));
  CHECK_THAT(hat_combined_weight(g, 3), WithinRel(*combined_weight(g, 1), 1e-15));
  CHECK(hat_combined_weight(g, 1) == 1.0);
  CHECK_THROWS_AS(hat_combined_weight(g, 0), std::invalid_argument);

  const auto h = WeightedJumpGraph::from_lyapunov(fixture::impulse_free_system().graph, fixture::impulse_free_lyapunov());
  CHECK_THAT(hat_combined_weight(h, 2), WithinAbs(4.1712, 5e-4));
  CHECK_THAT(*combined_weight(h, 2), WithinAbs(0.0650, 5e-4));
}

TEST_CASE("graphs without walks") {
  const WeightedJumpGraph lone(JumpGraph(1, {}), Matrix::Zero(1, 1));
  CHECK_FALSE(combined_weight(lone, 1).has_value());
  CHECK_FALSE(brute_force_combined_weight(lone, 1).has_value());
  Matrix g = Matrix::Zero(2, 2);
  g(0, 1) = 2.0;
  const WeightedJumpGraph one_way(JumpGraph(2, {{0, 1}}), g);
  CHECK(combined_weight(one_way, 1).has_value());
  CHECK_FALSE(combined_weight(one_way, 2).has_value());
  const auto table = combined_log_weight_table(one_way, 3);
  CHECK(table[0] == 0.0);
  CHECK(table[1].has_value());
  CHECK_FALSE(table[2].has_value());
  CHECK_THAT(hat_combined_weight(one_way, 3), WithinAbs(2.0, 1e-15));
}

TEST_CASE("complete two-mode graph with equal weights") {
  Matrix g = Matrix::Zero(2, 2);
  g(0, 1) = g(1, 0) = 0.7;
  const auto w = WeightedJumpGraph(JumpGraph::complete(2), g);
  for (std::size_t l = 0; l <= 10; ++l) CHECK_THAT(*combined_weight(w, l), WithinRel(std::pow(0.7, l), 1e-12));
}

TEST_CASE("large lengths stay finite in log space") {
  const auto g = fixture::three_mode_graph();
  const auto lr = combined_log_weight(g, 1'000'000);
  REQUIRE(lr.has_value());
  CHECK(std::isfinite(*lr));
  CHECK_THROWS(combined_log_weight(g, kMaxWalkLength + 1));
}

TEST_CASE("dynamic program matches exhaustive enumeration") {
  std::mt19937_64 gen(21);
  for (int trial = 0; trial < 40; ++trial) {
    const auto rg = random_graph(gen, 2 + trial % 4);
    for (std::size_t l = 1; l <= 5; ++l) {
      const auto dp = combined_log_weight(rg.graph, l);
      const double ref = oracle::enumerate_log_weight(rg.gains, rg.edges, l);
      if (!std::isfinite(ref)) {
        CHECK_FALSE(dp.has_value());
        continue;
      }
      REQUIRE(dp.has_value());
      CHECK_THAT(*dp, WithinAbs(ref, 1e-12 * std::max(1.0, std::abs(ref))));
    }
  }
}

TEST_CASE("max-plus powers by squaring equal sequential products") {
  std::mt19937_64 gen(31);
  for (int trial = 0; trial < 20; ++trial) {
    const auto rg = random_graph(gen, 4);
    const Matrix& w = rg.graph.log_weights();
    Matrix seq = max_plus_identity(4);
    for (std::size_t k = 1; k <= 9; ++k) {
      seq = max_plus_product(seq, w);
      const Matrix fast = max_plus_power(w, k);
      for (Eigen::Index i = 0; i < 16; ++i) {
        const double a = seq.data()[i], b = fast.data()[i];
        if (std::isinf(a)) CHECK(a == b);
        else CHECK_THAT(b, WithinAbs(a, 1e-12));
      }
    }
  }
}

TEST_CASE("combined weights are submultiplicative") {
  std::mt19937_64 gen(41);
  for (int trial = 0; trial < 50; ++trial) {
    const auto rg = random_graph(gen, 2 + trial % 5);
    const auto table = combined_log_weight_table(rg.graph, 8);
    for (std::size_t a = 1; a <= 4; ++a)
      for (std::size_t b = 1; b <= 4; ++b)
        if (table[a] && table[b] && table[a + b]) CHECK(*table[a + b] <= *table[a] + *table[b] + 1e-12);
  }
}
