#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "privrisk/ecograph.hpp"
#include "privrisk/ingest.hpp"
#include "privrisk/metrics.hpp"
#include "privrisk/models.hpp"
#include "privrisk/risk.hpp"
#include "privrisk/semantics.hpp"

namespace privrisk {

// Immutable, fully loaded view of a workspace: everything an assessment
// reads. Safe to share across threads.
class WorkspaceSnapshot {
 public:
  const EcosystemGraph& graph() const { return graph_; }
  const std::string& graph_hash() const { return graph_hash_; }
  const NodeFeatureTable& table() const { return table_; }
  const std::optional<Tensor>& semantic() const { return semantic_; }
  bool has_model(ModelKind kind) const { return models_.count(kind) > 0; }

  // Throws kMissingState without a checkpoint for the query's model,
  // kStateMismatch when the checkpoint was trained on another graph.
  RiskReport assess(const RiskQuery& query) const;

 private:
  friend class Workspace;

  struct LoadedModel {
    LinkModel model;
    std::string graph_hash;
    ModelInputs inputs;
  };

  EcosystemGraph graph_;
  std::string graph_hash_;
  NodeFeatureTable table_;
  std::optional<Tensor> semantic_;
  std::map<ModelKind, LoadedModel> models_;
};

struct EmbedOptions {
  EmbeddingProviderConfig provider;
  std::optional<std::filesystem::path> lexicon_path;  // builtin when absent
};

struct TrainOptions {
  ModelConfig model;
  std::uint64_t split_seed = 0;
  double split_ratio = 0.9;
};

struct AccuracyRow {
  std::string graph_label;  // "G_(nodes,edges)"
  std::map<ModelKind, std::optional<double>> best_accuracy;
};

// A pipeline workspace directory:
//
//   state.json          provenance and artifact hashes
//   cases.jsonl         normalized, filtered cases
//   graph.json          ecosystem graph
//   features.csv        node metrics
//   embeddings.tsv      semantic embeddings (external-embedding format)
//   checkpoints/<model>.ckpt, reports/train_<model>.json
class Workspace {
 public:
  explicit Workspace(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  // Returns (kept, loaded) case counts.
  std::pair<std::size_t, std::size_t> ingest(const std::filesystem::path& cases_file,
                                             const CaseFilter& filter,
                                             LoadMode mode = LoadMode::kStrict);
  GraphStats build();
  GraphStats metrics();
  std::size_t embed(const EmbedOptions& options);
  TrainReport train(const TrainOptions& options);

  EcosystemGraph load_graph() const;
  std::vector<SemanticEmbedding> load_embeddings() const;
  std::optional<TrainReport> load_train_report(ModelKind kind) const;
  std::shared_ptr<const WorkspaceSnapshot> snapshot() const;

  AccuracyRow accuracy_row() const;

  std::filesystem::path path_of(const std::string& relative) const {
    return root_ / relative;
  }

 private:
  void require_file(const std::string& relative, const std::string& step) const;

  std::filesystem::path root_;
};

std::string file_hash(const std::filesystem::path& path);

std::string accuracy_table(const std::vector<AccuracyRow>& rows);
std::string accuracy_json(const std::vector<AccuracyRow>& rows);

}  // namespace privrisk
