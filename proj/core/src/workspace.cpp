#include "privrisk/workspace.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "privrisk/error.hpp"
#include "privrisk/nncore.hpp"
#include "privrisk/text.hpp"

namespace privrisk {

namespace {

using nlohmann::json;

constexpr const char* kState = "state.json";
constexpr const char* kCases = "cases.jsonl";
constexpr const char* kGraph = "graph.json";
constexpr const char* kFeatures = "features.csv";
constexpr const char* kEmbeddings = "embeddings.tsv";

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  // Write-then-rename so readers never observe a partial artifact.
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp);
    out << bytes;
    if (!out) throw Error(ErrorCode::kIo, "write failure on " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::string checkpoint_rel(ModelKind kind) {
  return "checkpoints/" + std::string(model_kind_id(kind)) + ".ckpt";
}

std::string report_rel(ModelKind kind) {
  return "reports/train_" + std::string(model_kind_id(kind)) + ".json";
}

json filter_json(const CaseFilter& f) {
  json j = json::object();
  if (f.min_loss_usd) j["min_loss_usd"] = *f.min_loss_usd;
  if (f.sector) j["sector"] = *f.sector;
  if (f.victim_age_range) {
    j["victim_age_range"] = {f.victim_age_range->min, f.victim_age_range->max};
  }
  return j;
}

}  // namespace

std::string file_hash(const std::filesystem::path& path) {
  return hex64(fnv1a64(read_file(path)));
}

class StateFile {
 public:
  explicit StateFile(std::filesystem::path path) : path_(std::move(path)) {
    if (std::filesystem::exists(path_)) {
      try {
        doc_ = json::parse(read_file(path_));
      } catch (const json::exception& e) {
        throw Error(ErrorCode::kParse, "workspace state: " + std::string(e.what()));
      }
    } else {
      doc_ = json{{"version", 1}};
    }
  }
  json& doc() { return doc_; }
  void save() { write_file(path_, doc_.dump(2) + "\n"); }

 private:
  std::filesystem::path path_;
  json doc_;
};

Workspace::Workspace(std::filesystem::path root) : root_(std::move(root)) {
  std::filesystem::create_directories(root_);
}

void Workspace::require_file(const std::string& relative,
                             const std::string& step) const {
  if (!std::filesystem::exists(root_ / relative)) {
    throw Error(ErrorCode::kMissingState,
                "workspace " + root_.string() + " has no " + relative + "; run `" +
                    step + "` first");
  }
}

std::pair<std::size_t, std::size_t> Workspace::ingest(
    const std::filesystem::path& cases_file, const CaseFilter& filter,
    LoadMode mode) {
  const LoadResult loaded = load_cases(cases_file, mode);
  const auto kept = filter_cases(loaded.records, filter);
  if (kept.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no cases left after filtering");
  }
  save_cases(kept, root_ / kCases);
  StateFile state(root_ / kState);
  state.doc()["cases"] = {{"source", cases_file.string()},
                          {"source_hash", file_hash(cases_file)},
                          {"filter", filter_json(filter)},
                          {"loaded", loaded.records.size()},
                          {"skipped_lines", loaded.issues.size()},
                          {"kept", kept.size()},
                          {"hash", file_hash(root_ / kCases)}};
  state.save();
  return {kept.size(), loaded.records.size()};
}

GraphStats Workspace::build() {
  require_file(kCases, "ingest");
  const auto cases = load_cases(root_ / kCases).records;
  const EcosystemGraph g = build_graph(cases);
  write_file(root_ / kGraph, graph_to_json(g) + "\n");
  const GraphStats stats = graph_stats(g);
  StateFile state(root_ / kState);
  state.doc()["graph"] = {{"hash", g.content_hash()},
                          {"n_nodes", stats.n_nodes},
                          {"n_edges", stats.n_edges},
                          {"total_weight", stats.total_weight}};
  state.save();
  return stats;
}

EcosystemGraph Workspace::load_graph() const {
  require_file(kGraph, "build");
  return graph_from_json(read_file(root_ / kGraph));
}

GraphStats Workspace::metrics() {
  const EcosystemGraph g = load_graph();
  const NodeFeatureTable table = feature_table(g);
  write_file(root_ / kFeatures, feature_table_csv(g, table));
  StateFile state(root_ / kState);
  state.doc()["metrics"] = {{"graph_hash", g.content_hash()},
                            {"hash", file_hash(root_ / kFeatures)}};
  state.save();
  return graph_stats(g);
}

std::size_t Workspace::embed(const EmbedOptions& options) {
  const EcosystemGraph g = load_graph();
  const Lexicon lexicon = options.lexicon_path ? load_lexicon_tsv(*options.lexicon_path)
                                               : builtin_lexicon();
  const EmbeddingProvider provider(options.provider);
  const auto embeddings = embed_all(g, lexicon, provider);
  const auto tmp = root_ / (std::string(kEmbeddings) + ".tmp");
  save_external_embeddings(embeddings, tmp);
  std::filesystem::rename(tmp, root_ / kEmbeddings);

  const auto& cfg = options.provider;
  StateFile state(root_ / kState);
  state.doc()["embeddings"] = {
      {"provider", cfg.provider == EmbeddingProviderKind::kHashed ? "hashed" : "external"},
      {"embedding_dim", cfg.embedding_dim},
      {"max_token_len", cfg.max_token_len},
      {"seed", cfg.seed},
      {"lexicon", options.lexicon_path ? options.lexicon_path->string() : "builtin"},
      {"graph_hash", g.content_hash()},
      {"hash", file_hash(root_ / kEmbeddings)}};
  state.save();
  return embeddings.size();
}

std::vector<SemanticEmbedding> Workspace::load_embeddings() const {
  require_file(kEmbeddings, "embed");
  const EcosystemGraph g = load_graph();
  const ExternalEmbeddings ext = load_external_embeddings(root_ / kEmbeddings);
  std::vector<SemanticEmbedding> out;
  out.reserve(g.node_count());
  for (const auto& name : g.names()) {
    const auto it = ext.vectors.find(name);
    if (it == ext.vectors.end()) {
      throw Error(ErrorCode::kStateMismatch,
                  "embeddings do not cover attribute \"" + name + "\"; rerun `embed`");
    }
    out.push_back({name, it->second});
  }
  return out;
}

TrainReport Workspace::train(const TrainOptions& options) {
  const EcosystemGraph g = load_graph();
  std::optional<Tensor> semantic;
  if (options.model.kind == ModelKind::kSeeGcn) {
    semantic = embedding_matrix(load_embeddings());
  }
  const LinkSplit split = random_link_split(g, options.split_ratio, options.split_seed);
  TrainResult result =
      privrisk::train(g, options.model, split, semantic ? &*semantic : nullptr);

  nn::Checkpoint ck = result.model.to_checkpoint();
  const std::string graph_hash = g.content_hash();
  ck.metadata["graph.hash"] = graph_hash;
  ck.metadata["split.seed"] = std::to_string(options.split_seed);
  ck.metadata["model.seed"] = std::to_string(options.model.seed);

  const ModelKind kind = options.model.kind;
  std::filesystem::create_directories(root_ / "checkpoints");
  std::filesystem::create_directories(root_ / "reports");
  write_file(root_ / checkpoint_rel(kind), nn::serialize_checkpoint(ck));
  write_file(root_ / report_rel(kind), train_report_json(result.report) + "\n");

  StateFile state(root_ / kState);
  state.doc()["checkpoints"][std::string(model_kind_id(kind))] = {
      {"file", checkpoint_rel(kind)},
      {"graph_hash", graph_hash},
      {"hash", file_hash(root_ / checkpoint_rel(kind))},
      {"report", report_rel(kind)},
      {"best_accuracy", result.report.best_accuracy}};
  state.save();
  return result.report;
}

std::optional<TrainReport> Workspace::load_train_report(ModelKind kind) const {
  const auto path = root_ / report_rel(kind);
  if (!std::filesystem::exists(path)) return std::nullopt;
  return train_report_from_json(read_file(path));
}

std::shared_ptr<const WorkspaceSnapshot> Workspace::snapshot() const {
  auto snap = std::make_shared<WorkspaceSnapshot>();
  snap->graph_ = load_graph();
  snap->graph_hash_ = snap->graph_.content_hash();
  snap->table_ = feature_table(snap->graph_);
  if (std::filesystem::exists(root_ / kEmbeddings)) {
    try {
      snap->semantic_ = embedding_matrix(load_embeddings());
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kStateMismatch) throw;
    }
  }
  for (ModelKind kind : kAllModelKinds) {
    const auto path = root_ / checkpoint_rel(kind);
    if (!std::filesystem::exists(path)) continue;
    const nn::Checkpoint ck = nn::load_checkpoint(path);
    const auto hash_it = ck.metadata.find("graph.hash");
    WorkspaceSnapshot::LoadedModel loaded{LinkModel::from_checkpoint(ck),
                                          hash_it == ck.metadata.end() ? "" : hash_it->second,
                                          {}};
    const bool wants_semantic = kind == ModelKind::kSeeGcn && snap->semantic_ &&
                                snap->semantic_->cols == loaded.model.embedding_dim();
    loaded.inputs = make_inputs(snap->graph_, loaded.model.standardization(),
                                wants_semantic ? &*snap->semantic_ : nullptr);
    snap->models_.emplace(kind, std::move(loaded));
  }
  return snap;
}

RiskReport WorkspaceSnapshot::assess(const RiskQuery& query) const {
  if (!(query.threshold >= 0.0 && query.threshold <= 100.0)) {
    throw Error(ErrorCode::kInvalidArgument, "threshold must lie in [0, 100]");
  }
  if (query.lost_attributes.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "at least one lost attribute is required");
  }
  const auto it = models_.find(query.model);
  if (it == models_.end()) {
    throw Error(ErrorCode::kMissingState,
                "no " + std::string(model_kind_label(query.model)) +
                    " checkpoint in this workspace; run `train --model " +
                    std::string(model_kind_id(query.model)) + "` first");
  }
  const LoadedModel& loaded = it->second;
  if (loaded.graph_hash != graph_hash_) {
    throw Error(ErrorCode::kStateMismatch,
                std::string(model_kind_label(query.model)) +
                    " checkpoint was trained on graph " + loaded.graph_hash +
                    ", active graph is " + graph_hash_);
  }
  if (query.model == ModelKind::kSeeGcn && !loaded.inputs.semantic) {
    throw Error(ErrorCode::kStateMismatch,
                "seeGCN needs embeddings matching the active graph; rerun `embed`");
  }
  return privrisk::assess(query, graph_, table_, loaded.model, loaded.inputs);
}

AccuracyRow Workspace::accuracy_row() const {
  const GraphStats stats = graph_stats(load_graph());
  AccuracyRow row;
  row.graph_label = "G_(" + std::to_string(stats.n_nodes) + "," +
                    std::to_string(stats.n_edges) + ")";
  for (ModelKind kind : kAllModelKinds) {
    const auto report = load_train_report(kind);
    row.best_accuracy[kind] =
        report ? std::optional<double>(report->best_accuracy) : std::nullopt;
  }
  return row;
}

std::string accuracy_table(const std::vector<AccuracyRow>& rows) {
  std::size_t width = 5;
  for (const auto& r : rows) width = std::max(width, r.graph_label.size());
  std::string out;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%-*s", static_cast<int>(width), "graph");
  out += buf;
  for (ModelKind kind : kAllModelKinds) {
    std::snprintf(buf, sizeof(buf), "  %10s", std::string(model_kind_label(kind)).c_str());
    out += buf;
  }
  out += '\n';
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-*s", static_cast<int>(width), r.graph_label.c_str());
    out += buf;
    for (ModelKind kind : kAllModelKinds) {
      const auto it = r.best_accuracy.find(kind);
      if (it != r.best_accuracy.end() && it->second) {
        std::snprintf(buf, sizeof(buf), "  %10.4f", *it->second);
      } else {
        std::snprintf(buf, sizeof(buf), "  %10s", "-");
      }
      out += buf;
    }
    out += '\n';
  }
  return out;
}

std::string accuracy_json(const std::vector<AccuracyRow>& rows) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json models = nlohmann::ordered_json::object();
    for (ModelKind kind : kAllModelKinds) {
      const auto it = r.best_accuracy.find(kind);
      if (it != r.best_accuracy.end() && it->second) {
        models[std::string(model_kind_label(kind))] = *it->second;
      } else {
        models[std::string(model_kind_label(kind))] = nullptr;
      }
    }
    doc.push_back({{"graph", r.graph_label}, {"best_accuracy", std::move(models)}});
  }
  return nlohmann::ordered_json{{"rows", std::move(doc)}}.dump(2) + "\n";
}

}  // namespace privrisk
