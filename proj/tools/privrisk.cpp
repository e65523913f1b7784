// privrisk: command-line pipeline over a workspace directory.

#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "privrisk/error.hpp"
#include "privrisk/ingest.hpp"
#include "privrisk/service.hpp"
#include "privrisk/text.hpp"
#include "privrisk/workspace.hpp"

namespace {

using namespace privrisk;

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kParse:
    case ErrorCode::kShapeMismatch:
      return 2;
    case ErrorCode::kNotFound:
      return 3;
    case ErrorCode::kMissingState:
      return 4;
    case ErrorCode::kStateMismatch:
      return 5;
    case ErrorCode::kConflict:
      return 6;
    case ErrorCode::kIo:
      return 7;
  }
  return 1;
}

void print_stats(const GraphStats& s) {
  std::cout << "nodes=" << s.n_nodes << " edges=" << s.n_edges
            << " total_weight=" << s.total_weight << "\n";
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << text;
}

Service* g_service = nullptr;

void on_signal(int) {
  if (g_service != nullptr) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Identity-attribute privacy risk prediction"};
  app.require_subcommand(1);
  std::string workspace = "workspace";
  app.add_option("-w,--workspace", workspace, "Workspace directory")->capture_default_str();

  // synth
  SynthConfig synth;
  std::string synth_out = "cases.jsonl";
  auto* synth_cmd = app.add_subcommand("synth", "Generate a seeded synthetic case corpus");
  synth_cmd->add_option("-o,--out", synth_out, "Output JSONL file")->capture_default_str();
  synth_cmd->add_option("--attributes", synth.n_attributes)->capture_default_str();
  synth_cmd->add_option("--cases", synth.n_cases)->capture_default_str();
  synth_cmd->add_option("--communities", synth.n_communities)->capture_default_str();
  synth_cmd->add_option("--bias", synth.intra_community_bias, "Intra-community bias in [0,1]")
      ->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed)->capture_default_str();

  // ingest
  std::string cases_file;
  std::optional<double> min_loss;
  std::optional<std::string> sector;
  std::optional<std::int64_t> age_min;
  std::optional<std::int64_t> age_max;
  bool lenient = false;
  auto* ingest_cmd = app.add_subcommand("ingest", "Load, validate and filter case records");
  ingest_cmd->add_option("cases", cases_file, "JSONL case file")->required();
  ingest_cmd->add_option("--min-loss", min_loss, "Keep cases with loss_usd strictly above");
  ingest_cmd->add_option("--sector", sector, "Keep cases from this sector");
  ingest_cmd->add_option("--age-min", age_min, "Victim age lower bound (inclusive)");
  ingest_cmd->add_option("--age-max", age_max, "Victim age upper bound (inclusive)");
  ingest_cmd->add_flag("--lenient", lenient, "Skip malformed lines instead of failing");

  auto* build_cmd = app.add_subcommand("build", "Build the ecosystem graph from ingested cases");
  auto* metrics_cmd = app.add_subcommand("metrics", "Compute node metrics for the graph");

  // embed
  EmbedOptions embed;
  std::string provider = "hashed";
  std::optional<std::string> external;
  std::optional<std::string> lexicon;
  auto* embed_cmd = app.add_subcommand("embed", "Compute semantic embeddings for attributes");
  embed_cmd->add_option("--provider", provider, "hashed or external")
      ->check(CLI::IsMember({"hashed", "external"}))
      ->capture_default_str();
  embed_cmd->add_option("--external", external, "Embedding file for the external provider");
  embed_cmd->add_option("--lexicon", lexicon, "Lexicon TSV (word<TAB>definition)");
  embed_cmd->add_option("--dim", embed.provider.embedding_dim)->capture_default_str();
  embed_cmd->add_option("--max-token-len", embed.provider.max_token_len)->capture_default_str();
  embed_cmd->add_option("--seed", embed.provider.seed)->capture_default_str();

  // train
  TrainOptions train;
  std::string model_name = "seegcn";
  std::string optimizer = "adam";
  auto* train_cmd = app.add_subcommand("train", "Train a link-prediction model");
  train_cmd->add_option("--model", model_name, "featuremlp, featuregcn or seegcn")
      ->capture_default_str();
  train_cmd->add_option("--epochs", train.model.epochs)->capture_default_str();
  train_cmd->add_option("--lr", train.model.lr)->capture_default_str();
  train_cmd->add_option("--hidden-dim", train.model.hidden_dim)->capture_default_str();
  train_cmd->add_option("--seed", train.model.seed, "Initialization and sampling seed")
      ->capture_default_str();
  train_cmd->add_option("--batch-size", train.model.batch_size,
                        "Pairs per optimizer step (0 = full batch)")
      ->capture_default_str();
  train_cmd->add_option("--split-seed", train.split_seed)->capture_default_str();
  train_cmd->add_option("--split-ratio", train.split_ratio)->capture_default_str();
  train_cmd->add_option("--optimizer", optimizer)
      ->check(CLI::IsMember({"adam", "sgd"}))
      ->capture_default_str();

  // assess
  std::string lost;
  double threshold = 0.0;
  std::string assess_model = "seegcn";
  std::optional<std::string> json_out;
  auto* assess_cmd = app.add_subcommand("assess", "Rank attributes at risk given lost ones");
  assess_cmd->add_option("--lost", lost, "Comma-separated lost attributes")->required();
  assess_cmd->add_option("--threshold", threshold, "Minimum normalized risk score (0-100)")
      ->capture_default_str();
  assess_cmd->add_option("--model", assess_model)->capture_default_str();
  assess_cmd->add_option("--json", json_out,
                         "Report JSON path ('-' for stdout; default reports/assess.json)");

  // serve
  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<std::string> static_dir;
  auto* serve_cmd = app.add_subcommand("serve", "Serve the JSON HTTP API");
  serve_cmd->add_option("--host", host)->capture_default_str();
  serve_cmd->add_option("--port", port)->capture_default_str();
  serve_cmd->add_option("--static", static_dir, "Directory of static UI assets");

  // report
  std::vector<std::string> report_workspaces;
  bool report_json = false;
  auto* report_cmd = app.add_subcommand("report", "Accuracy matrix across workspaces and models");
  report_cmd->add_option("workspaces", report_workspaces,
                         "Workspaces to include (default: --workspace)");
  report_cmd->add_flag("--json", report_json, "Emit JSON instead of a table");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth_cmd) {
      const auto cases = synthesize_cases(synth);
      save_cases(cases, synth_out);
      std::cout << "cases=" << cases.size() << " out=" << synth_out << "\n";
      return 0;
    }
    Workspace ws(workspace);
    if (*ingest_cmd) {
      CaseFilter filter;
      filter.min_loss_usd = min_loss;
      filter.sector = sector;
      if (age_min || age_max) {
        filter.victim_age_range = AgeRange{age_min.value_or(0), age_max.value_or(200)};
      }
      const auto [kept, loaded] =
          ws.ingest(cases_file, filter, lenient ? LoadMode::kLenient : LoadMode::kStrict);
      std::cout << "loaded=" << loaded << " kept=" << kept << "\n";
    } else if (*build_cmd) {
      print_stats(ws.build());
    } else if (*metrics_cmd) {
      print_stats(ws.metrics());
    } else if (*embed_cmd) {
      embed.provider.provider =
          provider == "external" ? EmbeddingProviderKind::kExternal : EmbeddingProviderKind::kHashed;
      if (external) embed.provider.external_path = *external;
      if (lexicon) embed.lexicon_path = *lexicon;
      const std::size_t n = ws.embed(embed);
      std::cout << "embedded=" << n << " dim=" << embed.provider.embedding_dim << "\n";
    } else if (*train_cmd) {
      train.model.kind = parse_model_kind(model_name);
      if (optimizer == "sgd") train.model.optimizer = nn::OptimizerKind::kSgd;
      const TrainReport report = ws.train(train);
      std::cout << "model=" << model_kind_id(train.model.kind)
                << " best_accuracy=" << report.best_accuracy
                << " best_epoch=" << report.best_epoch << "\n";
    } else if (*assess_cmd) {
      RiskQuery query;
      query.lost_attributes = split_list(lost);
      query.threshold = threshold;
      query.model = parse_model_kind(assess_model);
      const RiskReport report = ws.snapshot()->assess(query);
      const std::string json = risk_report_json(report);
      const std::string path =
          json_out ? *json_out : ws.path_of("reports/assess.json").string();
      if (path != "-") {
        std::cout << risk_report_table(report);
        if (!json_out) std::filesystem::create_directories(ws.path_of("reports"));
      }
      write_text(path, json);
    } else if (*serve_cmd) {
      Service service(workspace);
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "serving " << workspace << " on http://" << host << ":" << port << "\n";
      std::optional<std::filesystem::path> dir;
      if (static_dir) dir = *static_dir;
      service.listen(host, port, dir);
      g_service = nullptr;
    } else if (*report_cmd) {
      if (report_workspaces.empty()) report_workspaces.push_back(workspace);
      std::vector<AccuracyRow> rows;
      for (const auto& dir : report_workspaces) rows.push_back(Workspace(dir).accuracy_row());
      std::cout << (report_json ? accuracy_json(rows) : accuracy_table(rows));
    }
  } catch (const Error& e) {
    std::cerr << "error[" << error_code_name(e.code()) << "]: " << e.what() << "\n";
    if (!e.suggestions().empty()) {
      std::cerr << "  did you mean:";
      for (const auto& s : e.suggestions()) std::cerr << " " << s;
      std::cerr << "\n";
    }
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
