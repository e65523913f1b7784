#include "privrisk/models.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <unordered_set>

#include "json.hpp"
#include "privrisk/error.hpp"

namespace privrisk {

namespace {

using nlohmann::json;

std::uint64_t pair_key(NodeId s, NodeId t, std::size_t n) {
  return static_cast<std::uint64_t>(s) * n + t;
}

std::string join_reals(std::span<const double> values) {
  std::string out;
  char buf[32];
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", values[i]);
    if (i) out.push_back(',');
    out += buf;
  }
  return out;
}

std::vector<double> split_reals(const std::string& text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size() && !text.empty()) {
    const auto comma = text.find(',', start);
    out.push_back(std::stod(text.substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

const std::string& meta(const nn::Checkpoint& ck, const std::string& key) {
  const auto it = ck.metadata.find(key);
  if (it == ck.metadata.end()) {
    throw Error(ErrorCode::kParse, "checkpoint lacks metadata \"" + key + "\"");
  }
  return it->second;
}

std::vector<NodeId> sources(std::span<const NodePair> pairs) {
  std::vector<NodeId> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(p.source);
  return out;
}

std::vector<NodeId> targets(std::span<const NodePair> pairs) {
  std::vector<NodeId> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(p.target);
  return out;
}

// Degrees, betweenness and closeness only; the models never read PageRank.
NodeFeatureTable structural_table(const EcosystemGraph& g) {
  NodeFeatureTable t;
  Degrees d = degrees(g);
  t.in_degree = std::move(d.in);
  t.out_degree = std::move(d.out);
  t.betweenness = betweenness(g);
  t.closeness = closeness(g);
  return t;
}

std::vector<double> column(const nn::Var& v) { return v.value().data; }

}  // namespace

std::string_view model_kind_id(ModelKind kind) {
  switch (kind) {
    case ModelKind::kFeatureMlp:
      return "featuremlp";
    case ModelKind::kFeatureGcn:
      return "featuregcn";
    case ModelKind::kSeeGcn:
      return "seegcn";
  }
  return "unknown";
}

std::string_view model_kind_label(ModelKind kind) {
  switch (kind) {
    case ModelKind::kFeatureMlp:
      return "featureMLP";
    case ModelKind::kFeatureGcn:
      return "featureGCN";
    case ModelKind::kSeeGcn:
      return "seeGCN";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view text) {
  std::string lower;
  for (char c : text) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  for (ModelKind k : kAllModelKinds) {
    if (lower == model_kind_id(k)) return k;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "unknown model \"" + std::string(text) +
                  "\" (expected featuremlp, featuregcn or seegcn)");
}

std::vector<NodePair> sample_negatives(const EcosystemGraph& g, std::size_t count,
                                       std::span<const NodePair> exclude,
                                       Rng& rng) {
  const std::size_t n = g.node_count();
  std::unordered_set<std::uint64_t> blocked;
  blocked.reserve(g.edge_count() + exclude.size() + count);
  for (const auto& e : g.edges()) blocked.insert(pair_key(e.source, e.target, n));
  for (const auto& p : exclude) blocked.insert(pair_key(p.source, p.target, n));
  const std::size_t universe = n < 2 ? 0 : n * (n - 1);
  const std::size_t available = universe - std::min(universe, blocked.size());
  if (count > available) {
    throw Error(ErrorCode::kInvalidArgument,
                "graph too dense: need " + std::to_string(count) +
                    " negative pairs, only " + std::to_string(available) +
                    " non-edges available");
  }
  std::vector<NodePair> out;
  out.reserve(count);
  if (count * 4 <= available) {
    while (out.size() < count) {
      const NodeId u = rng.uniform_index(n);
      const NodeId v = rng.uniform_index(n);
      if (u == v) continue;
      if (blocked.insert(pair_key(u, v, n)).second) out.push_back({u, v});
    }
    return out;
  }
  std::vector<NodePair> pool;
  pool.reserve(available);
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = 0; v < n; ++v) {
      if (u != v && !blocked.count(pair_key(u, v, n))) pool.push_back({u, v});
    }
  }
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + rng.uniform_index(pool.size() - i);
    std::swap(pool[i], pool[j]);
    out.push_back(pool[i]);
  }
  return out;
}

LinkSplit random_link_split(const EcosystemGraph& g, double ratio,
                            std::uint64_t seed) {
  if (g.edge_count() < 10) {
    throw Error(ErrorCode::kInvalidArgument,
                "link split needs at least 10 edges, graph has " +
                    std::to_string(g.edge_count()));
  }
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "split ratio must lie in (0, 1)");
  }
  std::vector<NodePair> pos;
  pos.reserve(g.edge_count());
  for (const auto& e : g.edges()) pos.push_back({e.source, e.target});
  Rng rng(seed);
  rng.shuffle(std::span<NodePair>(pos));

  const auto total = pos.size();
  auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(total) * ratio));
  n_train = std::clamp<std::size_t>(n_train, 1, total - 1);

  LinkSplit split;
  split.split_seed = seed;
  split.train_pos.assign(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.val_pos.assign(pos.begin() + static_cast<std::ptrdiff_t>(n_train), pos.end());
  split.train_message_edges = split.train_pos;

  auto negs = sample_negatives(g, total, {}, rng);
  split.train_neg.assign(negs.begin(), negs.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.val_neg.assign(negs.begin() + static_cast<std::ptrdiff_t>(n_train), negs.end());
  return split;
}

void ModelConfig::validate() const {
  if (hidden_dim < 1 || epochs < 1 || !(lr > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "model config needs hidden_dim >= 1, epochs >= 1, lr > 0");
  }
  if (kind == ModelKind::kFeatureMlp) {
    if (mlp_hidden.empty() ||
        std::any_of(mlp_hidden.begin(), mlp_hidden.end(),
                    [](std::size_t d) { return d < 1; })) {
      throw Error(ErrorCode::kInvalidArgument, "mlp_hidden dims must be >= 1");
    }
  }
}

ModelInputs make_inputs(const EcosystemGraph& g,
                        const FeatureStandardization& standardization,
                        const Tensor* semantic) {
  ModelInputs in;
  in.features = standardization.apply(structural_table(g));
  in.message = std::make_shared<const nn::Adjacency>(nn::Adjacency::incoming(g));
  if (semantic) {
    if (semantic->rows != g.node_count()) {
      throw Error(ErrorCode::kShapeMismatch,
                  "semantic matrix has " + std::to_string(semantic->rows) +
                      " rows for " + std::to_string(g.node_count()) + " nodes");
    }
    in.semantic = *semantic;
  }
  return in;
}

LinkModel LinkModel::create(const ModelConfig& config, std::size_t embedding_dim) {
  config.validate();
  LinkModel m;
  m.kind_ = config.kind;
  m.hidden_dim_ = config.hidden_dim;
  Rng rng(derive_seed(config.seed, 0x1417));
  auto& p = m.params_;
  switch (config.kind) {
    case ModelKind::kFeatureMlp: {
      m.mlp_hidden_ = config.mlp_hidden;
      std::size_t d = 2 * kNodeFeatureCount;
      for (std::size_t i = 0; i < m.mlp_hidden_.size(); ++i) {
        nn::Dense::create(p, "mlp." + std::to_string(i), d, m.mlp_hidden_[i], rng);
        d = m.mlp_hidden_[i];
      }
      p.add("head.weight", Tensor(d, 1, 0.0));
      p.add("head.bias", Tensor(1, 1, 0.0));
      break;
    }
    case ModelKind::kSeeGcn:
      if (embedding_dim < 1) {
        throw Error(ErrorCode::kInvalidArgument, "seeGCN needs embedding_dim >= 1");
      }
      m.embedding_dim_ = embedding_dim;
      [[fallthrough]];
    case ModelKind::kFeatureGcn: {
      const std::size_t h = config.hidden_dim;
      nn::SageConvLayer::create(p, "sage1", kNodeFeatureCount, h, rng);
      nn::SageConvLayer::create(p, "sage2", h, h, rng);
      std::size_t head_in = h;
      if (config.kind == ModelKind::kSeeGcn) {
        nn::Dense::create(p, "sem", 2 * embedding_dim, h, rng);
        head_in = 2 * h;
      }
      p.add("head.weight", Tensor(head_in, 1, 0.0));
      p.add("head.bias", Tensor(1, 1, 0.0));
      break;
    }
  }
  return m;
}

void LinkModel::check_inputs(const ModelInputs& inputs,
                             std::span<const NodePair> pairs) const {
  const std::size_t n = inputs.node_count();
  if (inputs.features.cols != kNodeFeatureCount) {
    throw Error(ErrorCode::kShapeMismatch, "expected 4 node feature columns");
  }
  for (const auto& pr : pairs) {
    if (pr.source >= n || pr.target >= n) {
      throw Error(ErrorCode::kNotFound,
                  "unknown node id in pair (" + std::to_string(pr.source) + ", " +
                      std::to_string(pr.target) + ")");
    }
  }
  if (kind_ != ModelKind::kFeatureMlp &&
      (!inputs.message || inputs.message->size() != n)) {
    throw Error(ErrorCode::kShapeMismatch,
                "GCN models need a message graph over the same node set");
  }
  if (kind_ == ModelKind::kSeeGcn) {
    if (!inputs.semantic) {
      throw Error(ErrorCode::kMissingState, "seeGCN needs semantic embeddings");
    }
    if (inputs.semantic->rows != n || inputs.semantic->cols != embedding_dim_) {
      throw Error(ErrorCode::kShapeMismatch,
                  "semantic matrix must be " + std::to_string(n) + " x " +
                      std::to_string(embedding_dim_));
    }
  }
}

nn::Var LinkModel::forward(const ModelInputs& inputs,
                           std::span<const NodePair> pairs) const {
  check_inputs(inputs, pairs);
  const auto src = sources(pairs);
  const auto dst = targets(pairs);
  const nn::Var x(inputs.features);
  const nn::Dense head{"head.weight", "head.bias"};

  if (kind_ == ModelKind::kFeatureMlp) {
    nn::Var h = nn::concat_cols(nn::gather_rows(x, src), nn::gather_rows(x, dst));
    for (std::size_t i = 0; i < mlp_hidden_.size(); ++i) {
      const std::string prefix = "mlp." + std::to_string(i);
      h = nn::relu(nn::Dense{prefix + ".weight", prefix + ".bias"}.forward(params_, h));
    }
    return nn::sigmoid(head.forward(params_, h));
  }

  const nn::SageConvLayer sage1{"sage1.w_self", "sage1.w_neigh", "sage1.bias"};
  const nn::SageConvLayer sage2{"sage2.w_self", "sage2.w_neigh", "sage2.bias"};
  const nn::Var h1 = nn::relu(sage1.forward(params_, x, inputs.message));
  const nn::Var h2 = sage2.forward(params_, h1, inputs.message);
  nn::Var agg = nn::hadamard(nn::gather_rows(h2, src), nn::gather_rows(h2, dst));
  if (kind_ == ModelKind::kSeeGcn) {
    const nn::Var s(*inputs.semantic);
    const nn::Var edge_sem =
        nn::concat_cols(nn::gather_rows(s, src), nn::gather_rows(s, dst));
    const nn::Var a2 =
        nn::relu(nn::Dense{"sem.weight", "sem.bias"}.forward(params_, edge_sem));
    agg = nn::concat_cols(agg, a2);
  }
  return nn::sigmoid(head.forward(params_, agg));
}

std::vector<EdgeScore> LinkModel::score(const ModelInputs& inputs,
                                        std::span<const NodePair> pairs) const {
  nn::NoGradGuard no_grad;
  const nn::Var p = forward(inputs, pairs);
  std::vector<EdgeScore> out;
  out.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    out.push_back({pairs[i].source, pairs[i].target, p.value().data[i]});
  }
  return out;
}

nn::Checkpoint LinkModel::to_checkpoint() const {
  nn::Checkpoint ck;
  ck.params = params_.clone();
  ck.metadata["model.kind"] = std::string(model_kind_id(kind_));
  ck.metadata["model.hidden_dim"] = std::to_string(hidden_dim_);
  ck.metadata["model.embedding_dim"] = std::to_string(embedding_dim_);
  std::string dims;
  for (std::size_t i = 0; i < mlp_hidden_.size(); ++i) {
    if (i) dims.push_back(',');
    dims += std::to_string(mlp_hidden_[i]);
  }
  ck.metadata["model.mlp_hidden"] = dims;
  ck.metadata["features.mean"] = join_reals(standardization_.mean);
  ck.metadata["features.std"] = join_reals(standardization_.std);
  return ck;
}

LinkModel LinkModel::from_checkpoint(const nn::Checkpoint& checkpoint) {
  ModelConfig config;
  std::size_t embedding_dim = 0;
  std::vector<double> mean;
  std::vector<double> stdev;
  try {
    config.kind = parse_model_kind(meta(checkpoint, "model.kind"));
    config.hidden_dim = std::stoul(meta(checkpoint, "model.hidden_dim"));
    embedding_dim = std::stoul(meta(checkpoint, "model.embedding_dim"));
    config.mlp_hidden.clear();
    for (double d : split_reals(meta(checkpoint, "model.mlp_hidden"))) {
      config.mlp_hidden.push_back(static_cast<std::size_t>(d));
    }
    if (config.mlp_hidden.empty()) config.mlp_hidden = {1};
    mean = split_reals(meta(checkpoint, "features.mean"));
    stdev = split_reals(meta(checkpoint, "features.std"));
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kParse, std::string("bad checkpoint metadata: ") + e.what());
  }
  if (mean.size() != kNodeFeatureCount || stdev.size() != kNodeFeatureCount) {
    throw Error(ErrorCode::kParse, "checkpoint standardization must have 4 columns");
  }
  LinkModel m = create(config, embedding_dim);
  if (m.params_.size() != checkpoint.params.size()) {
    throw Error(ErrorCode::kShapeMismatch, "checkpoint parameter set mismatch");
  }
  for (auto& [name, var] : m.params_) {
    if (!checkpoint.params.contains(name)) {
      throw Error(ErrorCode::kShapeMismatch, "checkpoint lacks parameter \"" + name + "\"");
    }
    const Tensor& src = checkpoint.params.get(name).value();
    if (src.rows != var.rows() || src.cols != var.cols()) {
      throw Error(ErrorCode::kShapeMismatch, "checkpoint shape mismatch for \"" + name + "\"");
    }
    var.mutable_value() = src;
  }
  std::copy(mean.begin(), mean.end(), m.standardization_.mean.begin());
  std::copy(stdev.begin(), stdev.end(), m.standardization_.std.begin());
  return m;
}

LinkModel LinkModel::clone() const {
  LinkModel m = *this;
  m.params_ = params_.clone();
  return m;
}

std::vector<EdgeScore> score_feature_mlp(const LinkModel& model,
                                         const Tensor& features,
                                         std::span<const NodePair> pairs) {
  ModelInputs in;
  in.features = features;
  return model.score(in, pairs);
}

std::vector<EdgeScore> score_feature_gcn(const LinkModel& model,
                                         const Tensor& features,
                                         const EcosystemGraph& message_graph,
                                         std::span<const NodePair> pairs) {
  ModelInputs in;
  in.features = features;
  in.message = std::make_shared<const nn::Adjacency>(
      nn::Adjacency::incoming(message_graph));
  return model.score(in, pairs);
}

std::vector<EdgeScore> score_see_gcn(const LinkModel& model,
                                     const Tensor& features,
                                     const Tensor& semantic,
                                     const EcosystemGraph& message_graph,
                                     std::span<const NodePair> pairs) {
  ModelInputs in;
  in.features = features;
  in.semantic = semantic;
  in.message = std::make_shared<const nn::Adjacency>(
      nn::Adjacency::incoming(message_graph));
  return model.score(in, pairs);
}

EcosystemGraph message_graph(const EcosystemGraph& g, const LinkSplit& split) {
  std::vector<Edge> edges;
  edges.reserve(split.train_message_edges.size());
  for (const auto& p : split.train_message_edges) {
    const auto w = g.weight(p.source, p.target);
    if (!w) {
      throw Error(ErrorCode::kStateMismatch, "split edge absent from graph");
    }
    edges.push_back({p.source, p.target, *w});
  }
  return g.with_edges(std::move(edges));
}

double accuracy(std::span<const double> pos_scores,
                std::span<const double> neg_scores) {
  const std::size_t total = pos_scores.size() + neg_scores.size();
  if (total == 0) return 0.0;
  std::size_t correct = 0;
  for (double p : pos_scores) correct += p > 0.5 ? 1 : 0;
  for (double p : neg_scores) correct += p <= 0.5 ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(total);
}

double roc_auc(std::span<const double> pos_scores,
               std::span<const double> neg_scores) {
  if (pos_scores.empty() || neg_scores.empty()) return 0.5;
  // Rank-sum formulation with average ranks for ties.
  std::vector<std::pair<double, int>> all;
  all.reserve(pos_scores.size() + neg_scores.size());
  for (double p : pos_scores) all.emplace_back(p, 1);
  for (double p : neg_scores) all.emplace_back(p, 0);
  std::sort(all.begin(), all.end());
  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    while (j < all.size() && all[j].first == all[i].first) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (all[k].second) rank_sum += avg_rank;
    }
    i = j;
  }
  const auto np = static_cast<double>(pos_scores.size());
  const auto nn_ = static_cast<double>(neg_scores.size());
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn_);
}

double evaluate(const LinkModel& model, const ModelInputs& inputs,
                const LinkSplit& split) {
  std::vector<double> pos;
  for (const auto& s : model.score(inputs, split.val_pos)) pos.push_back(s.p);
  std::vector<double> neg;
  for (const auto& s : model.score(inputs, split.val_neg)) neg.push_back(s.p);
  return accuracy(pos, neg);
}

constexpr std::uint64_t kBatchOrderStream = 0x6261746368ULL;

TrainResult train(const EcosystemGraph& g, const ModelConfig& config,
                  const LinkSplit& split, const Tensor* semantic) {
  config.validate();
  if (split.train_pos.empty() || split.val_pos.empty() ||
      split.val_neg.size() != split.val_pos.size() ||
      split.train_neg.size() != split.train_pos.size()) {
    throw Error(ErrorCode::kInvalidArgument, "inconsistent link split");
  }
  if (config.kind == ModelKind::kSeeGcn && !semantic) {
    throw Error(ErrorCode::kMissingState, "seeGCN training needs semantic embeddings");
  }
  const std::size_t n = g.node_count();
  for (const auto* side : {&split.train_pos, &split.val_pos, &split.train_neg, &split.val_neg}) {
    for (const auto& p : *side) {
      if (p.source >= n || p.target >= n) {
        throw Error(ErrorCode::kInvalidArgument, "split refers to nodes outside the graph");
      }
    }
  }

  const EcosystemGraph train_graph = message_graph(g, split);
  const StandardizedFeatures feats = standardize(structural_table(train_graph));
  ModelInputs inputs;
  inputs.features = feats.matrix;
  inputs.message =
      std::make_shared<const nn::Adjacency>(nn::Adjacency::incoming(train_graph));
  if (config.kind == ModelKind::kSeeGcn) inputs.semantic = *semantic;

  LinkModel model = LinkModel::create(
      config, config.kind == ModelKind::kSeeGcn ? semantic->cols : 0);
  model.set_standardization(feats.params);
  nn::Optimizer optimizer({config.optimizer, config.lr});

  TrainResult result{model.clone(), {}};
  TrainReport& report = result.report;
  report.config = config;
  report.split_seed = split.split_seed;
  report.n_nodes = n;
  report.n_edges = g.edge_count();
  report.best_accuracy = -1.0;

  const std::uint64_t neg_seed = derive_seed(config.seed, split.split_seed);
  std::vector<NodePair> batch;
  std::vector<double> labels;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<NodePair> negs;
    if (epoch == 1) {
      negs = split.train_neg;
    } else {
      Rng rng(derive_seed(neg_seed, static_cast<std::uint64_t>(epoch)));
      negs = sample_negatives(g, split.train_pos.size(), split.val_neg, rng);
    }
    batch.assign(split.train_pos.begin(), split.train_pos.end());
    batch.insert(batch.end(), negs.begin(), negs.end());
    labels.assign(split.train_pos.size(), 1.0);
    labels.resize(batch.size(), 0.0);

    if (config.batch_size == 0 || config.batch_size >= batch.size()) {
      model.params().zero_grad();
      const nn::Var loss = nn::bce_loss(model.forward(inputs, batch), labels);
      nn::backward(loss);
      optimizer.step(model.params());
      report.train_loss.push_back(loss.value().data[0]);
    } else {
      {
        nn::NoGradGuard no_grad;
        report.train_loss.push_back(
            nn::bce_loss(model.forward(inputs, batch), labels).value().data[0]);
      }
      std::vector<std::size_t> order(batch.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      Rng order_rng(derive_seed(derive_seed(neg_seed, static_cast<std::uint64_t>(epoch)),
                                kBatchOrderStream));
      order_rng.shuffle(std::span<std::size_t>(order));
      std::vector<NodePair> part;
      std::vector<double> part_labels;
      for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
        const std::size_t end = std::min(order.size(), start + config.batch_size);
        part.clear();
        part_labels.clear();
        for (std::size_t i = start; i < end; ++i) {
          part.push_back(batch[order[i]]);
          part_labels.push_back(labels[order[i]]);
        }
        model.params().zero_grad();
        nn::backward(nn::bce_loss(model.forward(inputs, part), part_labels));
        optimizer.step(model.params());
      }
    }

    std::vector<double> pos;
    std::vector<double> neg;
    {
      nn::NoGradGuard no_grad;
      pos = column(model.forward(inputs, split.val_pos));
      neg = column(model.forward(inputs, split.val_neg));
    }
    const double acc = accuracy(pos, neg);
    report.val_accuracy.push_back(acc);
    report.val_auc.push_back(roc_auc(pos, neg));
    if (acc > report.best_accuracy) {
      report.best_accuracy = acc;
      report.best_epoch = epoch;
      result.model = model.clone();
    }
  }
  return result;
}

std::string train_report_json(const TrainReport& report) {
  json cfg = json::object();
  cfg["model"] = std::string(model_kind_label(report.config.kind));
  cfg["hidden_dim"] = report.config.hidden_dim;
  cfg["mlp_hidden"] = report.config.mlp_hidden;
  cfg["epochs"] = report.config.epochs;
  cfg["lr"] = report.config.lr;
  cfg["seed"] = report.config.seed;
  cfg["optimizer"] = report.config.optimizer == nn::OptimizerKind::kAdam ? "adam" : "sgd";
  cfg["batch_size"] = report.config.batch_size;
  json doc = json::object();
  doc["config"] = std::move(cfg);
  doc["split_seed"] = report.split_seed;
  doc["n_nodes"] = report.n_nodes;
  doc["n_edges"] = report.n_edges;
  doc["train_loss"] = report.train_loss;
  doc["val_accuracy"] = report.val_accuracy;
  doc["val_auc"] = report.val_auc;
  doc["best_accuracy"] = report.best_accuracy;
  doc["best_epoch"] = report.best_epoch;
  return doc.dump(2);
}

TrainReport train_report_from_json(std::string_view text) {
  try {
    const json doc = json::parse(text);
    TrainReport r;
    const json& cfg = doc.at("config");
    r.config.kind = parse_model_kind(cfg.at("model").get<std::string>());
    r.config.hidden_dim = cfg.at("hidden_dim").get<std::size_t>();
    r.config.mlp_hidden = cfg.at("mlp_hidden").get<std::vector<std::size_t>>();
    r.config.epochs = cfg.at("epochs").get<int>();
    r.config.lr = cfg.at("lr").get<double>();
    r.config.seed = cfg.at("seed").get<std::uint64_t>();
    r.config.batch_size = cfg.value("batch_size", std::size_t{0});
    r.config.optimizer = cfg.at("optimizer").get<std::string>() == "sgd"
                             ? nn::OptimizerKind::kSgd
                             : nn::OptimizerKind::kAdam;
    r.split_seed = doc.at("split_seed").get<std::uint64_t>();
    r.n_nodes = doc.at("n_nodes").get<std::size_t>();
    r.n_edges = doc.at("n_edges").get<std::size_t>();
    r.train_loss = doc.at("train_loss").get<std::vector<double>>();
    r.val_accuracy = doc.at("val_accuracy").get<std::vector<double>>();
    r.val_auc = doc.at("val_auc").get<std::vector<double>>();
    r.best_accuracy = doc.at("best_accuracy").get<double>();
    r.best_epoch = doc.at("best_epoch").get<int>();
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("train report: ") + e.what());
  }
}

}  // namespace privrisk
