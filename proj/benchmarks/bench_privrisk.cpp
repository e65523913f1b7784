#include <benchmark/benchmark.h>

#include "privrisk/ingest.hpp"
#include "privrisk/metrics.hpp"
#include "privrisk/models.hpp"
#include "privrisk/risk.hpp"

using namespace privrisk;

namespace {

const EcosystemGraph& corpus_graph() {
  static const EcosystemGraph g = build_graph(synthesize_cases(SynthConfig{}));
  return g;
}

EcosystemGraph random_graph(std::size_t n, double avg_degree, std::uint64_t seed) {
  Rng rng(seed);
  const double p = avg_degree / static_cast<double>(n);
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back("n" + std::to_string(i));
  std::vector<Edge> edges;
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = 0; v < n; ++v) {
      if (u != v && rng.bernoulli(p)) edges.push_back({u, v, rng.uniform_int(1, 5)});
    }
  }
  return EcosystemGraph::from_edges(std::move(names), std::move(edges));
}

void BM_BuildGraph(benchmark::State& state) {
  const auto cases = synthesize_cases(SynthConfig{});
  for (auto _ : state) benchmark::DoNotOptimize(build_graph(cases));
}
BENCHMARK(BM_BuildGraph)->Unit(benchmark::kMillisecond);

void BM_Betweenness(benchmark::State& state) {
  const auto g = random_graph(static_cast<std::size_t>(state.range(0)), 4.0, 1);
  for (auto _ : state) benchmark::DoNotOptimize(betweenness(g));
}
BENCHMARK(BM_Betweenness)->Arg(100)->Arg(300)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_PageRank(benchmark::State& state) {
  const auto g = random_graph(static_cast<std::size_t>(state.range(0)), 4.0, 2);
  for (auto _ : state) benchmark::DoNotOptimize(pagerank(g));
}
BENCHMARK(BM_PageRank)->Arg(100)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_FeatureTable(benchmark::State& state) {
  const auto& g = corpus_graph();
  for (auto _ : state) benchmark::DoNotOptimize(feature_table(g));
}
BENCHMARK(BM_FeatureTable)->Unit(benchmark::kMillisecond);

void BM_ModelForward(benchmark::State& state) {
  const auto& g = corpus_graph();
  ModelConfig cfg;
  cfg.kind = static_cast<ModelKind>(state.range(0));
  const std::size_t emb = 128;
  Rng rng(3);
  Tensor sem{g.node_count(), emb, std::vector<double>(g.node_count() * emb)};
  for (double& x : sem.data) x = rng.uniform(-0.1, 0.1);
  const auto model = LinkModel::create(cfg, emb);
  const auto inputs = make_inputs(g, standardize(feature_table(g)).params, &sem);
  std::vector<NodePair> pairs;
  for (int i = 0; i < 1024; ++i) {
    pairs.push_back({rng.uniform_index(g.node_count()), rng.uniform_index(g.node_count())});
  }
  for (auto _ : state) benchmark::DoNotOptimize(model.score(inputs, pairs));
  state.SetLabel(std::string(model_kind_label(cfg.kind)));
}
BENCHMARK(BM_ModelForward)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

void BM_Assess(benchmark::State& state) {
  const auto& g = corpus_graph();
  const auto table = feature_table(g);
  const LinkScorer scorer = [](std::span<const NodePair> pairs) {
    return std::vector<double>(pairs.size(), 0.5);
  };
  RiskQuery q;
  q.lost_attributes = {g.name(0), g.name(1)};
  for (auto _ : state) benchmark::DoNotOptimize(assess(q, g, table, scorer));
}
BENCHMARK(BM_Assess)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
