#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "privrisk/ecograph.hpp"
#include "privrisk/metrics.hpp"
#include "privrisk/nncore.hpp"

namespace privrisk {

enum class ModelKind { kFeatureMlp, kFeatureGcn, kSeeGcn };

inline constexpr ModelKind kAllModelKinds[] = {
    ModelKind::kFeatureMlp, ModelKind::kFeatureGcn, ModelKind::kSeeGcn};

// "featuremlp", "featuregcn", "seegcn"
std::string_view model_kind_id(ModelKind kind);
// "featureMLP", "featureGCN", "seeGCN"
std::string_view model_kind_label(ModelKind kind);
// Case-insensitive; accepts the id or the label.
ModelKind parse_model_kind(std::string_view text);

struct NodePair {
  NodeId source = 0;
  NodeId target = 0;

  friend bool operator==(const NodePair&, const NodePair&) = default;
  friend auto operator<=>(const NodePair&, const NodePair&) = default;
};

// Positives split 9:1 (by default) into training and validation; the
// training positives double as the message-passing edges. Negatives are
// non-edges of the full graph, one per positive, disjoint across sides.
struct LinkSplit {
  std::vector<NodePair> train_message_edges;
  std::vector<NodePair> train_pos;
  std::vector<NodePair> val_pos;
  std::vector<NodePair> train_neg;
  std::vector<NodePair> val_neg;
  std::uint64_t split_seed = 0;
};

LinkSplit random_link_split(const EcosystemGraph& g, double ratio = 0.9,
                            std::uint64_t seed = 0);

// `count` distinct non-edges (u != v) of g, none in `exclude`, in sampling
// order. Throws kInvalidArgument when too few non-edges remain.
std::vector<NodePair> sample_negatives(const EcosystemGraph& g, std::size_t count,
                                       std::span<const NodePair> exclude,
                                       Rng& rng);

struct ModelConfig {
  ModelKind kind = ModelKind::kFeatureGcn;
  std::size_t hidden_dim = 64;
  std::vector<std::size_t> mlp_hidden = {64, 32};
  int epochs = 50;
  double lr = 0.01;
  std::uint64_t seed = 0;
  nn::OptimizerKind optimizer = nn::OptimizerKind::kAdam;
  // Supervision pairs per optimizer step; 0 trains full-batch (one step
  // per epoch).
  std::size_t batch_size = 256;

  void validate() const;
};

struct EdgeScore {
  NodeId source = 0;
  NodeId target = 0;
  double p = 0.0;
};

// Everything a forward pass reads besides parameters.
struct ModelInputs {
  Tensor features;                                  // n x 4, standardized
  std::shared_ptr<const nn::Adjacency> message;     // GCN kinds
  std::optional<Tensor> semantic;                   // n x emb_dim, seeGCN

  std::size_t node_count() const { return features.rows; }
};

// Standardized features of g (using `standardization`), in-neighbor
// adjacency of g, and optional semantic matrix.
ModelInputs make_inputs(const EcosystemGraph& g,
                        const FeatureStandardization& standardization,
                        const Tensor* semantic = nullptr);

// One of the three link predictors with its parameters.
//
//   featureMLP:  concat(x_u, x_v) -> 64 -> ReLU -> 32 -> ReLU -> 1 -> sigmoid
//   featureGCN:  H = SAGE2(ReLU(SAGE1(x))); A1 = H_u * H_v; sigmoid(dense(A1))
//   seeGCN:      A2 = ReLU(dense(concat(se_u, se_v)));
//                sigmoid(dense(concat(A1, A2)))
//
// Output heads start at zero so a fresh model scores every pair 0.5.
class LinkModel {
 public:
  static LinkModel create(const ModelConfig& config, std::size_t embedding_dim = 0);
  static LinkModel from_checkpoint(const nn::Checkpoint& checkpoint);

  ModelKind kind() const { return kind_; }
  std::size_t hidden_dim() const { return hidden_dim_; }
  std::size_t embedding_dim() const { return embedding_dim_; }
  const std::vector<std::size_t>& mlp_hidden() const { return mlp_hidden_; }

  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }

  // Standardization fitted on the training message graph; reused at query
  // time so features live on the training scale.
  const FeatureStandardization& standardization() const { return standardization_; }
  void set_standardization(const FeatureStandardization& s) { standardization_ = s; }

  // Link probabilities, |pairs| x 1.
  nn::Var forward(const ModelInputs& inputs, std::span<const NodePair> pairs) const;
  std::vector<EdgeScore> score(const ModelInputs& inputs,
                               std::span<const NodePair> pairs) const;

  // Metadata: kind, dims, standardization. Callers add provenance keys.
  nn::Checkpoint to_checkpoint() const;
  LinkModel clone() const;

 private:
  void check_inputs(const ModelInputs& inputs, std::span<const NodePair> pairs) const;

  ModelKind kind_ = ModelKind::kFeatureGcn;
  std::size_t hidden_dim_ = 64;
  std::size_t embedding_dim_ = 0;
  std::vector<std::size_t> mlp_hidden_;
  nn::ParamStore params_;
  FeatureStandardization standardization_;
};

std::vector<EdgeScore> score_feature_mlp(const LinkModel& model,
                                         const Tensor& features,
                                         std::span<const NodePair> pairs);
std::vector<EdgeScore> score_feature_gcn(const LinkModel& model,
                                         const Tensor& features,
                                         const EcosystemGraph& message_graph,
                                         std::span<const NodePair> pairs);
std::vector<EdgeScore> score_see_gcn(const LinkModel& model,
                                     const Tensor& features,
                                     const Tensor& semantic,
                                     const EcosystemGraph& message_graph,
                                     std::span<const NodePair> pairs);

struct TrainReport {
  ModelConfig config;
  std::uint64_t split_seed = 0;
  std::vector<double> train_loss;      // before each epoch's update
  std::vector<double> val_accuracy;    // after each epoch's update
  std::vector<double> val_auc;         // auxiliary
  double best_accuracy = 0.0;
  int best_epoch = 0;                  // 1-based
  std::size_t n_nodes = 0;
  std::size_t n_edges = 0;
};

std::string train_report_json(const TrainReport& report);
TrainReport train_report_from_json(std::string_view text);

struct TrainResult {
  LinkModel model;  // best-validation-accuracy checkpoint
  TrainReport report;
};

// Per epoch: fresh train negatives, BCE over train_pos + negatives in
// shuffled batches of config.batch_size (one optimizer step each, or one
// full-batch step when batch_size is 0), then validation accuracy.
// `semantic` (n x emb_dim) is required for seeGCN only.
TrainResult train(const EcosystemGraph& g, const ModelConfig& config,
                  const LinkSplit& split, const Tensor* semantic = nullptr);

// Graph made of the split's message edges (weights from g), same nodes.
EcosystemGraph message_graph(const EcosystemGraph& g, const LinkSplit& split);

// Positives scored > 0.5 and negatives scored <= 0.5, over all pairs.
double accuracy(std::span<const double> pos_scores,
                std::span<const double> neg_scores);
// Probability a random positive outscores a random negative (ties 1/2).
double roc_auc(std::span<const double> pos_scores,
               std::span<const double> neg_scores);

double evaluate(const LinkModel& model, const ModelInputs& inputs,
                const LinkSplit& split);

}  // namespace privrisk
