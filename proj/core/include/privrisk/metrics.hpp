#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "privrisk/ecograph.hpp"
#include "privrisk/tensor.hpp"

namespace privrisk {

struct Degrees {
  std::vector<std::int64_t> in;
  std::vector<std::int64_t> out;
};

// Distinct-edge counts; weights ignored.
Degrees degrees(const EcosystemGraph& g);

// Directed, unweighted betweenness (Brandes). Raw pair-dependency sums:
// endpoints excluded, no normalization.
std::vector<double> betweenness(const EcosystemGraph& g);

// Incoming-distance closeness with the Wasserman-Faust correction:
// (r / (n - 1)) * (r / D) where r nodes reach v at total distance D.
std::vector<double> closeness(const EcosystemGraph& g);

struct PageRankOptions {
  double damping = 0.85;
  double tol = 1e-10;  // L1 change between iterates
  int max_iter = 200;
};

// Power iteration on the weight-normalized transition matrix with uniform
// teleport and uniform redistribution of dangling mass. `reverse` runs the
// same procedure on the transposed graph.
std::vector<double> pagerank(const EcosystemGraph& g,
                             const PageRankOptions& options = {},
                             bool reverse = false);

struct NodeFeatureTable {
  std::vector<std::int64_t> in_degree;
  std::vector<std::int64_t> out_degree;
  std::vector<double> betweenness;
  std::vector<double> closeness;
  std::vector<double> pagerank;
  std::vector<double> reverse_pagerank;

  std::size_t size() const { return in_degree.size(); }
};

NodeFeatureTable feature_table(const EcosystemGraph& g,
                               const PageRankOptions& options = {});

inline constexpr std::size_t kNodeFeatureCount = 4;

// Column order: in_degree, out_degree, betweenness, closeness.
struct FeatureStandardization {
  std::array<double, kNodeFeatureCount> mean{};
  std::array<double, kNodeFeatureCount> std{};

  // (x - mean) / std; columns with std < 1e-12 are only centered.
  Tensor apply(const NodeFeatureTable& table) const;
};

Tensor raw_feature_matrix(const NodeFeatureTable& table);

struct StandardizedFeatures {
  Tensor matrix;  // n x 4
  FeatureStandardization params;
};

// Population mean/std fit on `table`, then applied to it.
StandardizedFeatures standardize(const NodeFeatureTable& table);

// CSV columns: node, in_degree, out_degree, betweenness, closeness,
// pagerank, reverse_pagerank.
std::string feature_table_csv(const EcosystemGraph& g,
                              const NodeFeatureTable& table);
void save_feature_table_csv(const EcosystemGraph& g,
                            const NodeFeatureTable& table,
                            const std::filesystem::path& path);

}  // namespace privrisk
