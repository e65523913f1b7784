#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "privrisk/ingest.hpp"

namespace privrisk {

using NodeId = std::size_t;

struct Edge {
  NodeId source = 0;
  NodeId target = 0;
  std::int64_t weight = 1;

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct Neighbor {
  NodeId node = 0;
  std::int64_t weight = 1;
};

// Directed, weighted Identity Ecosystem graph. Immutable once built.
//
// Nodes are attribute names with dense ids 0..n-1. An edge a -> b with
// weight w records that a disclosure of a was followed by a disclosure of b
// in w cases. No self-loops; every weight is >= 1; at most one edge per
// ordered pair. Edges are kept sorted by (source, target).
class EcosystemGraph {
 public:
  EcosystemGraph() = default;

  // Validates ids, weights, self-loops and duplicate pairs.
  static EcosystemGraph from_edges(std::vector<std::string> names,
                                   std::vector<Edge> edges);

  std::size_t node_count() const { return names_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(NodeId id) const;
  std::optional<NodeId> find(std::string_view attribute) const;
  // Normalizes, then resolves; throws kNotFound with nearest-name hints.
  NodeId resolve(std::string_view attribute) const;

  std::span<const Edge> edges() const { return edges_; }
  std::span<const Neighbor> out_edges(NodeId id) const;
  std::span<const Neighbor> in_edges(NodeId id) const;
  std::optional<std::int64_t> weight(NodeId source, NodeId target) const;
  bool has_edge(NodeId source, NodeId target) const {
    return weight(source, target).has_value();
  }

  EcosystemGraph transpose() const;
  // Same node set, different edge list.
  EcosystemGraph with_edges(std::vector<Edge> edges) const;

  // FNV-1a over the canonical JSON serialization.
  std::string content_hash() const;

  friend bool operator==(const EcosystemGraph& a, const EcosystemGraph& b) {
    return a.names_ == b.names_ && a.edges_ == b.edges_;
  }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, NodeId> index_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> out_offsets_;
  std::vector<Neighbor> out_;
  std::vector<std::size_t> in_offsets_;
  std::vector<Neighbor> in_;
};

struct DisclosureProb {
  NodeId source = 0;
  NodeId target = 0;
  double p = 0.0;
};

struct GraphStats {
  std::size_t n_nodes = 0;
  std::size_t n_edges = 0;
  std::int64_t total_weight = 0;

  friend bool operator==(const GraphStats&, const GraphStats&) = default;
};

// Each (input, output) pair with input != output adds 1 to that edge.
// Node order is first appearance (inputs, then outputs, case by case).
EcosystemGraph build_graph(const std::vector<CaseRecord>& cases);

// p(source -> t) = w(source -> t) / total out-weight of source, in target
// id order. Empty when source has no outgoing edges.
std::vector<DisclosureProb> disclosure_probabilities(const EcosystemGraph& g,
                                                     NodeId source);

GraphStats graph_stats(const EcosystemGraph& g);

// {"nodes": [names in id order], "edges": [[src, dst, weight], ...]}
std::string graph_to_json(const EcosystemGraph& g);
EcosystemGraph graph_from_json(std::string_view text);
void save_graph(const EcosystemGraph& g, const std::filesystem::path& path);
EcosystemGraph load_graph(const std::filesystem::path& path);

}  // namespace privrisk
