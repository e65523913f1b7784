#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "oracles.hpp"
#include "privrisk/metrics.hpp"
#include "test_support.hpp"

using namespace privrisk;
namespace t = privrisk::testing;

namespace {

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

EcosystemGraph path3() {
  return EcosystemGraph::from_edges({"a", "b", "c"}, {{0, 1, 1}, {1, 2, 1}});
}

}  // namespace

TEST_CASE("degrees on the three-case graph") {
  const auto g = t::three_case_graph();
  const auto d = degrees(g);
  const NodeId ssn = *g.find("social security number");
  CHECK(d.out[ssn] == 5);
  CHECK(d.in[ssn] == 0);
  CHECK(std::accumulate(d.in.begin(), d.in.end(), std::int64_t{0}) == 11);
  CHECK(std::accumulate(d.out.begin(), d.out.end(), std::int64_t{0}) == 11);
}

TEST_CASE("isolated node has zero degrees") {
  const auto g = EcosystemGraph::from_edges({"a", "b", "lonely"}, {{0, 1, 3}});
  const auto d = degrees(g);
  CHECK(d.in[2] == 0);
  CHECK(d.out[2] == 0);
}

TEST_CASE("degrees equal adjacency matrix row and column sums") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto g = t::random_graph(30, 0.15, seed);
    const std::size_t n = g.node_count();
    std::vector<std::vector<int>> a(n, std::vector<int>(n, 0));
    for (const auto& e : g.edges()) a[e.source][e.target] = 1;
    const auto d = degrees(g);
    for (std::size_t i = 0; i < n; ++i) {
      int row = 0;
      int col = 0;
      for (std::size_t j = 0; j < n; ++j) {
        row += a[i][j];
        col += a[j][i];
      }
      CHECK(d.out[i] == row);
      CHECK(d.in[i] == col);
    }
  }
}

TEST_CASE("betweenness closed forms") {
  CHECK(betweenness(path3()) == std::vector<double>{0.0, 1.0, 0.0});
  std::vector<Edge> star;
  for (NodeId leaf = 1; leaf <= 5; ++leaf) star.push_back({0, leaf, 1});
  const auto s = betweenness(EcosystemGraph::from_edges(t::node_names(6), star));
  for (double b : s) CHECK(b == 0.0);
  // Two equal shortest paths a->b->d and a->c->d split the credit.
  const auto diamond = EcosystemGraph::from_edges(
      {"a", "b", "c", "d"}, {{0, 1, 1}, {0, 2, 1}, {1, 3, 1}, {2, 3, 1}});
  CHECK(betweenness(diamond) == std::vector<double>{0.0, 0.5, 0.5, 0.0});
}

TEST_CASE("betweenness and closeness match exhaustive oracles on random graphs") {
  const auto start = std::chrono::steady_clock::now();
  double worst_b = 0.0;
  double worst_c = 0.0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    const std::size_t n = 1 + rng.uniform_index(12);
    const double p = rng.uniform(0.05, 0.6);
    const auto g = t::random_graph(n, p, derive_seed(seed, 1));
    worst_b = std::max(worst_b, max_abs_diff(betweenness(g), t::betweenness_oracle(g)));
    worst_c = std::max(worst_c, max_abs_diff(closeness(g), t::closeness_oracle(g)));
  }
  CHECK(worst_b <= 1e-9);
  CHECK(worst_c <= 1e-9);
  CHECK(std::chrono::steady_clock::now() - start < std::chrono::minutes(1));
}

TEST_CASE("betweenness on DAGs equals the oracle exactly") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto g = t::random_dag(12, 0.35, seed);
    CHECK(max_abs_diff(betweenness(g), t::betweenness_oracle(g)) <= 1e-12);
  }
}

TEST_CASE("closeness closed forms") {
  const auto ab = EcosystemGraph::from_edges({"a", "b"}, {{0, 1, 1}});
  CHECK(closeness(ab) == std::vector<double>{0.0, 1.0});
  for (double c : closeness(t::bidirected_cycle(3))) CHECK(c == doctest::Approx(1.0));
  const auto g = t::random_graph(40, 0.1, 5);
  for (double c : closeness(g)) {
    CHECK(c >= 0.0);
    CHECK(c <= 1.0);
  }
}

TEST_CASE("pagerank on symmetric cycles is uniform") {
  for (std::size_t n : {2, 3, 5, 10, 64}) {
    for (bool reverse : {false, true}) {
      const auto pr = pagerank(t::bidirected_cycle(n), {}, reverse);
      for (double x : pr) CHECK(std::abs(x - 1.0 / static_cast<double>(n)) <= 1e-10);
    }
  }
  const auto single = EcosystemGraph::from_edges({"only"}, {});
  CHECK(pagerank(single) == std::vector<double>{1.0});
}

TEST_CASE("pagerank matches the dense oracle and sums to one") {
  const auto g3 = t::three_case_graph();
  CHECK(max_abs_diff(pagerank(g3), t::pagerank_oracle(g3)) <= 1e-8);
  CHECK(max_abs_diff(pagerank(g3, {}, true), t::pagerank_oracle(g3.transpose())) <= 1e-8);

  Rng rng(2024);
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t n = trial < 2 ? 1000 : 1 + rng.uniform_index(300);
    const double p = rng.uniform(0.5, 4.0) / static_cast<double>(n);
    const auto g = t::random_graph(n, p, rng.next_u64(), 20);
    for (bool reverse : {false, true}) {
      const auto pr = pagerank(g, {}, reverse);
      const double total = std::accumulate(pr.begin(), pr.end(), 0.0);
      CHECK(std::abs(total - 1.0) <= 1e-9);
      for (double x : pr) CHECK(x > 0.0);
      const auto oracle = t::pagerank_oracle(reverse ? g.transpose() : g);
      CHECK(max_abs_diff(pr, oracle) <= 1e-8);
    }
  }
}

TEST_CASE("reverse pagerank is pagerank of the transpose") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto g = t::random_graph(40, 0.08, seed);
    CHECK(pagerank(g, {}, true) == pagerank(g.transpose()));
  }
}

TEST_CASE("feature table and standardization") {
  const auto g = t::three_case_graph();
  const auto table = feature_table(g);
  REQUIRE(table.size() == 7);
  CHECK(std::accumulate(table.in_degree.begin(), table.in_degree.end(), std::int64_t{0}) == 11);
  CHECK(std::accumulate(table.out_degree.begin(), table.out_degree.end(), std::int64_t{0}) == 11);

  // Uniform graph: every degree column has zero variance and standardizes to 0.
  const auto uniform = standardize(feature_table(t::bidirected_cycle(8)));
  for (double x : uniform.matrix.data) CHECK(std::abs(x) <= 1e-12);

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto s = standardize(feature_table(t::random_graph(60, 0.08, seed)));
    REQUIRE(s.matrix.cols == kNodeFeatureCount);
    for (std::size_t c = 0; c < s.matrix.cols; ++c) {
      double mean = 0.0;
      double sq = 0.0;
      for (std::size_t r = 0; r < s.matrix.rows; ++r) mean += s.matrix(r, c);
      mean /= static_cast<double>(s.matrix.rows);
      for (std::size_t r = 0; r < s.matrix.rows; ++r) sq += std::pow(s.matrix(r, c) - mean, 2);
      CHECK(std::abs(mean) <= 1e-9);
      CHECK(std::sqrt(sq / static_cast<double>(s.matrix.rows)) == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("all metrics finite") {
  const auto g = t::random_graph(200, 0.02, 3);
  const auto table = feature_table(g);
  for (std::size_t i = 0; i < table.size(); ++i) {
    CHECK(std::isfinite(table.betweenness[i]));
    CHECK(std::isfinite(table.closeness[i]));
    CHECK(table.pagerank[i] > 0.0);
    CHECK(table.reverse_pagerank[i] > 0.0);
  }
}

TEST_CASE("feature CSV layout") {
  const auto g = t::three_case_graph();
  const auto csv = feature_table_csv(g, feature_table(g));
  CHECK(csv.rfind("node,in_degree,out_degree,betweenness,closeness,pagerank,reverse_pagerank\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 8);
}
