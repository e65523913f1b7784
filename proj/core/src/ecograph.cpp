#include "privrisk/ecograph.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "privrisk/error.hpp"
#include "privrisk/text.hpp"

namespace privrisk {

namespace {

using nlohmann::json;

void build_csr(std::size_t n, std::span<const Edge> edges, bool by_source,
               std::vector<std::size_t>& offsets, std::vector<Neighbor>& out) {
  offsets.assign(n + 1, 0);
  for (const auto& e : edges) ++offsets[(by_source ? e.source : e.target) + 1];
  for (std::size_t i = 0; i < n; ++i) offsets[i + 1] += offsets[i];
  out.assign(edges.size(), Neighbor{});
  std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
  // Edges are sorted by (source, target), so both adjacency directions come
  // out sorted by neighbor id.
  for (const auto& e : edges) {
    const NodeId key = by_source ? e.source : e.target;
    const NodeId other = by_source ? e.target : e.source;
    out[cursor[key]++] = Neighbor{other, e.weight};
  }
}

}  // namespace

EcosystemGraph EcosystemGraph::from_edges(std::vector<std::string> names,
                                          std::vector<Edge> edges) {
  EcosystemGraph g;
  const std::size_t n = names.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!g.index_.emplace(names[i], i).second) {
      throw Error(ErrorCode::kInvalidArgument,
                  "duplicate node name \"" + names[i] + "\"");
    }
  }
  for (const auto& e : edges) {
    if (e.source >= n || e.target >= n) {
      throw Error(ErrorCode::kInvalidArgument, "edge endpoint out of range");
    }
    if (e.source == e.target) {
      throw Error(ErrorCode::kInvalidArgument,
                  "self-loop on node " + std::to_string(e.source));
    }
    if (e.weight < 1) {
      throw Error(ErrorCode::kInvalidArgument, "edge weight must be >= 1");
    }
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return a.source != b.source ? a.source < b.source : a.target < b.target;
  });
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (edges[i].source == edges[i - 1].source &&
        edges[i].target == edges[i - 1].target) {
      throw Error(ErrorCode::kInvalidArgument,
                  "duplicate edge " + std::to_string(edges[i].source) + "->" +
                      std::to_string(edges[i].target));
    }
  }
  g.names_ = std::move(names);
  g.edges_ = std::move(edges);
  build_csr(n, g.edges_, true, g.out_offsets_, g.out_);
  build_csr(n, g.edges_, false, g.in_offsets_, g.in_);
  return g;
}

const std::string& EcosystemGraph::name(NodeId id) const {
  if (id >= names_.size()) {
    throw Error(ErrorCode::kNotFound, "unknown node id " + std::to_string(id));
  }
  return names_[id];
}

std::optional<NodeId> EcosystemGraph::find(std::string_view attribute) const {
  const auto it = index_.find(std::string(attribute));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

NodeId EcosystemGraph::resolve(std::string_view attribute) const {
  const std::string key = normalize_attribute(attribute);
  if (auto id = find(key)) return *id;
  throw Error(ErrorCode::kNotFound,
              "unknown attribute \"" + std::string(attribute) + "\"",
              nearest_names(key, names_));
}

std::span<const Neighbor> EcosystemGraph::out_edges(NodeId id) const {
  if (id >= names_.size()) {
    throw Error(ErrorCode::kNotFound, "unknown node id " + std::to_string(id));
  }
  return std::span<const Neighbor>(out_).subspan(
      out_offsets_[id], out_offsets_[id + 1] - out_offsets_[id]);
}

std::span<const Neighbor> EcosystemGraph::in_edges(NodeId id) const {
  if (id >= names_.size()) {
    throw Error(ErrorCode::kNotFound, "unknown node id " + std::to_string(id));
  }
  return std::span<const Neighbor>(in_).subspan(
      in_offsets_[id], in_offsets_[id + 1] - in_offsets_[id]);
}

std::optional<std::int64_t> EcosystemGraph::weight(NodeId source,
                                                   NodeId target) const {
  const auto outs = out_edges(source);
  const auto it = std::lower_bound(
      outs.begin(), outs.end(), target,
      [](const Neighbor& nb, NodeId t) { return nb.node < t; });
  if (it == outs.end() || it->node != target) return std::nullopt;
  return it->weight;
}

EcosystemGraph EcosystemGraph::transpose() const {
  std::vector<Edge> flipped;
  flipped.reserve(edges_.size());
  for (const auto& e : edges_) flipped.push_back({e.target, e.source, e.weight});
  return from_edges(names_, std::move(flipped));
}

EcosystemGraph EcosystemGraph::with_edges(std::vector<Edge> edges) const {
  return from_edges(names_, std::move(edges));
}

std::string EcosystemGraph::content_hash() const {
  return hex64(fnv1a64(graph_to_json(*this)));
}

EcosystemGraph build_graph(const std::vector<CaseRecord>& cases) {
  if (cases.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "cannot build a graph from an empty case list");
  }
  std::vector<std::string> names;
  std::unordered_map<std::string, NodeId> index;
  auto intern = [&](const std::string& attribute) {
    const auto [it, inserted] = index.emplace(attribute, names.size());
    if (inserted) names.push_back(attribute);
    return it->second;
  };
  std::map<std::pair<NodeId, NodeId>, std::int64_t> weights;
  for (const auto& rec : cases) {
    std::vector<NodeId> ins;
    std::vector<NodeId> outs;
    for (const auto& a : rec.inputs) {
      const NodeId id = intern(a);
      if (std::find(ins.begin(), ins.end(), id) == ins.end()) ins.push_back(id);
    }
    for (const auto& b : rec.outputs) {
      const NodeId id = intern(b);
      if (std::find(outs.begin(), outs.end(), id) == outs.end()) {
        outs.push_back(id);
      }
    }
    for (NodeId a : ins) {
      for (NodeId b : outs) {
        if (a != b) ++weights[{a, b}];
      }
    }
  }
  std::vector<Edge> edges;
  edges.reserve(weights.size());
  for (const auto& [pair, w] : weights) {
    edges.push_back({pair.first, pair.second, w});
  }
  return EcosystemGraph::from_edges(std::move(names), std::move(edges));
}

std::vector<DisclosureProb> disclosure_probabilities(const EcosystemGraph& g,
                                                     NodeId source) {
  const auto outs = g.out_edges(source);
  std::int64_t total = 0;
  for (const auto& nb : outs) total += nb.weight;
  std::vector<DisclosureProb> probs;
  probs.reserve(outs.size());
  for (const auto& nb : outs) {
    probs.push_back({source, nb.node,
                     static_cast<double>(nb.weight) / static_cast<double>(total)});
  }
  return probs;
}

GraphStats graph_stats(const EcosystemGraph& g) {
  GraphStats s;
  s.n_nodes = g.node_count();
  s.n_edges = g.edge_count();
  for (const auto& e : g.edges()) s.total_weight += e.weight;
  return s;
}

std::string graph_to_json(const EcosystemGraph& g) {
  json edges = json::array();
  for (const auto& e : g.edges()) {
    edges.push_back(json::array({e.source, e.target, e.weight}));
  }
  json doc = json::object();
  doc["nodes"] = g.names();
  doc["edges"] = std::move(edges);
  return doc.dump();
}

EcosystemGraph graph_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, std::string("graph JSON: ") + e.what());
  }
  try {
    if (!doc.is_object() || !doc.contains("nodes") || !doc.contains("edges") ||
        !doc["nodes"].is_array() || !doc["edges"].is_array()) {
      throw Error(ErrorCode::kParse,
                  "graph JSON must be an object with \"nodes\" and \"edges\" arrays");
    }
    std::vector<std::string> names;
    for (const auto& n : doc["nodes"]) {
      if (!n.is_string()) throw Error(ErrorCode::kParse, "node names must be strings");
      names.push_back(n.get<std::string>());
    }
    std::vector<Edge> edges;
    for (const auto& e : doc["edges"]) {
      if (!e.is_array() || e.size() != 3 || !e[0].is_number_unsigned() ||
          !e[1].is_number_unsigned() || !e[2].is_number_integer()) {
        throw Error(ErrorCode::kParse,
                    "edges must be [src_id, dst_id, weight] integer triples");
      }
      edges.push_back({e[0].get<NodeId>(), e[1].get<NodeId>(),
                       e[2].get<std::int64_t>()});
    }
    return EcosystemGraph::from_edges(std::move(names), std::move(edges));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kParse) throw;
    throw Error(ErrorCode::kParse, std::string("graph JSON: ") + e.what());
  }
}

void save_graph(const EcosystemGraph& g, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << graph_to_json(g) << '\n';
  if (!out) throw Error(ErrorCode::kIo, "write failure on " + path.string());
}

EcosystemGraph load_graph(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read graph file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return graph_from_json(buf.str());
}

}  // namespace privrisk
