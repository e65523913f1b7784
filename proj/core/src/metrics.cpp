#include "privrisk/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <queue>

#include "privrisk/error.hpp"

namespace privrisk {

namespace {

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

Degrees degrees(const EcosystemGraph& g) {
  const std::size_t n = g.node_count();
  Degrees d{std::vector<std::int64_t>(n, 0), std::vector<std::int64_t>(n, 0)};
  for (const auto& e : g.edges()) {
    ++d.out[e.source];
    ++d.in[e.target];
  }
  return d;
}

std::vector<double> betweenness(const EcosystemGraph& g) {
  const std::size_t n = g.node_count();
  std::vector<double> score(n, 0.0);
  std::vector<std::int64_t> dist(n);
  std::vector<double> sigma(n);
  std::vector<double> delta(n);
  std::vector<std::vector<NodeId>> preds(n);
  std::vector<NodeId> order;
  order.reserve(n);
  std::queue<NodeId> frontier;

  for (NodeId s = 0; s < n; ++s) {
    std::fill(dist.begin(), dist.end(), -1);
    std::fill(sigma.begin(), sigma.end(), 0.0);
    std::fill(delta.begin(), delta.end(), 0.0);
    for (auto& p : preds) p.clear();
    order.clear();

    dist[s] = 0;
    sigma[s] = 1.0;
    frontier.push(s);
    while (!frontier.empty()) {
      const NodeId v = frontier.front();
      frontier.pop();
      order.push_back(v);
      for (const auto& nb : g.out_edges(v)) {
        const NodeId w = nb.node;
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          frontier.push(w);
        }
        if (dist[w] == dist[v] + 1) {
          sigma[w] += sigma[v];
          preds[w].push_back(v);
        }
      }
    }
    // Accumulate dependencies in order of non-increasing distance.
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const NodeId w = *it;
      for (NodeId v : preds[w]) {
        delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
      }
      if (w != s) score[w] += delta[w];
    }
  }
  return score;
}

std::vector<double> closeness(const EcosystemGraph& g) {
  const std::size_t n = g.node_count();
  std::vector<double> score(n, 0.0);
  if (n < 2) return score;
  std::vector<std::int64_t> dist(n);
  std::queue<NodeId> frontier;
  for (NodeId v = 0; v < n; ++v) {
    // BFS against edge direction: who can reach v.
    std::fill(dist.begin(), dist.end(), -1);
    dist[v] = 0;
    frontier.push(v);
    std::int64_t reached = 0;
    std::int64_t total = 0;
    while (!frontier.empty()) {
      const NodeId u = frontier.front();
      frontier.pop();
      for (const auto& nb : g.in_edges(u)) {
        if (dist[nb.node] < 0) {
          dist[nb.node] = dist[u] + 1;
          ++reached;
          total += dist[nb.node];
          frontier.push(nb.node);
        }
      }
    }
    if (reached > 0 && total > 0) {
      const double r = static_cast<double>(reached);
      score[v] = (r / static_cast<double>(n - 1)) * (r / static_cast<double>(total));
    }
  }
  return score;
}

std::vector<double> pagerank(const EcosystemGraph& g,
                             const PageRankOptions& options, bool reverse) {
  if (g.node_count() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "pagerank of an empty graph");
  }
  if (reverse) return pagerank(g.transpose(), options, false);

  const std::size_t n = g.node_count();
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> out_weight(n, 0.0);
  for (const auto& e : g.edges()) {
    out_weight[e.source] += static_cast<double>(e.weight);
  }

  std::vector<double> rank(n, inv_n);
  std::vector<double> next(n);
  for (int iter = 0; iter < options.max_iter; ++iter) {
    double dangling = 0.0;
    for (NodeId v = 0; v < n; ++v) {
      if (out_weight[v] == 0.0) dangling += rank[v];
    }
    const double base =
        (1.0 - options.damping) * inv_n + options.damping * dangling * inv_n;
    for (NodeId v = 0; v < n; ++v) {
      double inflow = 0.0;
      for (const auto& nb : g.in_edges(v)) {
        inflow += rank[nb.node] * static_cast<double>(nb.weight) /
                  out_weight[nb.node];
      }
      next[v] = base + options.damping * inflow;
    }
    double change = 0.0;
    for (NodeId v = 0; v < n; ++v) change += std::abs(next[v] - rank[v]);
    rank.swap(next);
    if (change <= options.tol) break;
  }
  return rank;
}

NodeFeatureTable feature_table(const EcosystemGraph& g,
                               const PageRankOptions& options) {
  NodeFeatureTable t;
  Degrees d = degrees(g);
  t.in_degree = std::move(d.in);
  t.out_degree = std::move(d.out);
  t.betweenness = betweenness(g);
  t.closeness = closeness(g);
  if (g.node_count() > 0) {
    t.pagerank = pagerank(g, options, false);
    t.reverse_pagerank = pagerank(g, options, true);
  }
  return t;
}

Tensor raw_feature_matrix(const NodeFeatureTable& table) {
  Tensor m(table.size(), kNodeFeatureCount);
  for (std::size_t i = 0; i < table.size(); ++i) {
    m(i, 0) = static_cast<double>(table.in_degree[i]);
    m(i, 1) = static_cast<double>(table.out_degree[i]);
    m(i, 2) = table.betweenness[i];
    m(i, 3) = table.closeness[i];
  }
  return m;
}

Tensor FeatureStandardization::apply(const NodeFeatureTable& table) const {
  Tensor m = raw_feature_matrix(table);
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < kNodeFeatureCount; ++j) {
      const double centered = m(i, j) - mean[j];
      m(i, j) = std[j] < 1e-12 ? centered : centered / std[j];
    }
  }
  return m;
}

StandardizedFeatures standardize(const NodeFeatureTable& table) {
  const Tensor raw = raw_feature_matrix(table);
  FeatureStandardization params;
  const auto n = static_cast<double>(raw.rows);
  for (std::size_t j = 0; j < kNodeFeatureCount && raw.rows > 0; ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < raw.rows; ++i) sum += raw(i, j);
    const double mean = sum / n;
    double sq = 0.0;
    for (std::size_t i = 0; i < raw.rows; ++i) {
      sq += (raw(i, j) - mean) * (raw(i, j) - mean);
    }
    params.mean[j] = mean;
    params.std[j] = std::sqrt(sq / n);
  }
  return {params.apply(table), params};
}

std::string feature_table_csv(const EcosystemGraph& g,
                              const NodeFeatureTable& table) {
  std::string out =
      "node,in_degree,out_degree,betweenness,closeness,pagerank,"
      "reverse_pagerank\n";
  for (std::size_t i = 0; i < table.size(); ++i) {
    out += csv_field(g.name(i));
    out += ',' + std::to_string(table.in_degree[i]);
    out += ',' + std::to_string(table.out_degree[i]);
    out += ',' + format_real(table.betweenness[i]);
    out += ',' + format_real(table.closeness[i]);
    out += ',' + format_real(table.pagerank[i]);
    out += ',' + format_real(table.reverse_pagerank[i]);
    out += '\n';
  }
  return out;
}

void save_feature_table_csv(const EcosystemGraph& g,
                            const NodeFeatureTable& table,
                            const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << feature_table_csv(g, table);
}

}  // namespace privrisk
