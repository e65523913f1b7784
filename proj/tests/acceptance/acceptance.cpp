// One PASS/FAIL line per acceptance criterion; exits non-zero on any FAIL.

#include <sys/wait.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <tuple>

#include "httplib.h"
#include "json.hpp"
#include "oracles.hpp"
#include "privrisk/error.hpp"
#include "privrisk/metrics.hpp"
#include "privrisk/models.hpp"
#include "privrisk/risk.hpp"
#include "privrisk/semantics.hpp"
#include "privrisk/service.hpp"
#include "privrisk/workspace.hpp"
#include "test_support.hpp"

using namespace privrisk;
namespace t = privrisk::testing;
using Clock = std::chrono::steady_clock;

namespace {

// Collects failed checks for one criterion.
class Criterion {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    failed_ = failed_ || !ok;
  }
  void note(const std::string& text) { notes_.push_back(text); }
  bool failed() const { return failed_; }

  std::string detail() const {
    std::string out;
    for (const auto& n : notes_) out += (out.empty() ? "" : "; ") + n;
    for (const auto& f : failures_) out += (out.empty() ? "" : "; ") + ("failed: " + f);
    return out;
  }

 private:
  bool failed_ = false;
  std::vector<std::string> notes_;
  std::vector<std::string> failures_;
};

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return 1e300;
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

std::string fmt(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

// ---------------------------------------------------------------------------

void graph_fidelity(Criterion& c) {
  const auto loaded = load_cases(t::fixture("three_cases.jsonl"));
  const auto g = build_graph(loaded.records);
  const auto stats = graph_stats(g);
  c.note("nodes=" + std::to_string(stats.n_nodes) + " edges=" + std::to_string(stats.n_edges) +
         " total_weight=" + std::to_string(stats.total_weight));
  c.expect(stats == GraphStats{7, 11, 13}, "counts 7/11/13");

  // Independent recount: every (input, output) pair of every case.
  std::map<std::pair<std::string, std::string>, std::int64_t> expected;
  for (const auto& r : loaded.records) {
    for (const auto& in : r.inputs) {
      for (const auto& out : r.outputs) {
        if (in != out) ++expected[{in, out}];
      }
    }
  }
  std::size_t seen = 0;
  for (NodeId u = 0; u < g.node_count(); ++u) {
    for (const auto& nb : g.out_edges(u)) {
      ++seen;
      const auto it = expected.find({g.name(u), g.name(nb.node)});
      c.expect(it != expected.end() && it->second == nb.weight,
               "edge " + g.name(u) + " -> " + g.name(nb.node));
    }
  }
  c.expect(seen == expected.size(), "edge set size");
  // The literal edge list, in case order.
  const std::vector<std::tuple<std::string, std::string, std::int64_t>> listed = {
      {"bank account", "credit card", 2},
      {"bank account", "debit card", 1},
      {"bank account", "birth date", 1},
      {"bank account", "credit history", 1},
      {"name", "credit card", 1},
      {"name", "debit card", 1},
      {"social security number", "credit card", 2},
      {"social security number", "debit card", 1},
      {"social security number", "birth date", 1},
      {"social security number", "credit history", 1},
      {"social security number", "bank account", 1},
  };
  for (const auto& [from, to, w] : listed) {
    const auto u = g.find(from);
    const auto v = g.find(to);
    c.expect(u && v && g.weight(*u, *v) == w, from + " -> " + to);
  }
}

void disclosure(Criterion& c) {
  const auto g = EcosystemGraph::from_edges({"name", "bank account", "birth date"},
                                            {{0, 1, 3}, {0, 2, 7}});
  const auto probs = disclosure_probabilities(g, 0);
  c.expect(probs.size() == 2, "two outgoing edges");
  if (probs.size() == 2) {
    c.note("p=" + fmt(probs[0].p) + "," + fmt(probs[1].p));
    c.expect(std::abs(probs[0].p - 0.3) <= 1e-12, "0.3");
    c.expect(std::abs(probs[1].p - 0.7) <= 1e-12, "0.7");
  }
  c.expect(disclosure_probabilities(g, 1).empty(), "no out edges -> empty");
  // Sums to one on the three-case graph.
  const auto g3 = build_graph(load_cases(t::fixture("three_cases.jsonl")).records);
  for (NodeId u = 0; u < g3.node_count(); ++u) {
    const auto ps = disclosure_probabilities(g3, u);
    if (ps.empty()) continue;
    double total = 0.0;
    for (const auto& p : ps) total += p.p;
    c.expect(std::abs(total - 1.0) <= 1e-12, "sum to one at " + g3.name(u));
  }
}

void centrality(Criterion& c) {
  const auto start = Clock::now();
  double worst_b = 0.0;
  double worst_c = 0.0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    const std::size_t n = 1 + rng.uniform_index(12);
    const double p = rng.uniform(0.05, 0.6);
    const auto g = t::random_graph(n, p, derive_seed(seed, 1));
    worst_b = std::max(worst_b, max_abs_diff(betweenness(g), t::betweenness_oracle(g)));
    worst_c = std::max(worst_c, max_abs_diff(closeness(g), t::closeness_oracle(g)));
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  c.note("200 graphs, max |betweenness err|=" + fmt(worst_b) + " max |closeness err|=" +
         fmt(worst_c) + " in " + fmt(secs) + "s");
  c.expect(worst_b <= 1e-9, "betweenness within 1e-9");
  c.expect(worst_c <= 1e-9, "closeness within 1e-9");
  c.expect(secs < 60.0, "under one minute");
}

void pagerank_checks(Criterion& c) {
  double worst_sum = 0.0;
  double worst_oracle = 0.0;
  Rng rng(2024);
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t n = trial < 2 ? 1000 : 1 + rng.uniform_index(300);
    const double p = rng.uniform(0.5, 4.0) / static_cast<double>(n);
    const auto g = t::random_graph(n, p, rng.next_u64(), 20);
    for (bool reverse : {false, true}) {
      const auto pr = pagerank(g, {}, reverse);
      worst_sum = std::max(worst_sum, std::abs(std::accumulate(pr.begin(), pr.end(), 0.0) - 1.0));
      worst_oracle = std::max(
          worst_oracle, max_abs_diff(pr, t::pagerank_oracle(reverse ? g.transpose() : g)));
    }
  }
  double worst_cycle = 0.0;
  for (std::size_t n : {2, 3, 5, 10, 64}) {
    for (bool reverse : {false, true}) {
      for (double x : pagerank(t::bidirected_cycle(n), {}, reverse)) {
        worst_cycle = std::max(worst_cycle, std::abs(x - 1.0 / static_cast<double>(n)));
      }
    }
  }
  c.note("max |sum-1|=" + fmt(worst_sum) + " max |pr-oracle|=" + fmt(worst_oracle) +
         " cycle max dev=" + fmt(worst_cycle));
  c.expect(worst_sum <= 1e-9, "sums to one");
  c.expect(worst_oracle <= 1e-8, "matches dense oracle");
  c.expect(worst_cycle <= 1e-10, "uniform on cycles");
}

void gradients(Criterion& c) {
  using namespace privrisk::nn;
  constexpr int kConfigs = 20;
  double worst = 0.0;
  int checks = 0;
  auto record = [&](double err) {
    worst = std::max(worst, err);
    ++checks;
  };
  auto probe = [](const Var& x, const Tensor& r) { return sum(hadamard(x, Var(r))); };

  for (int cfg = 0; cfg < kConfigs; ++cfg) {
    Rng rng(derive_seed(7000, static_cast<std::uint64_t>(cfg)));
    const std::size_t n = 8;
    const std::size_t d_in = 1 + rng.uniform_index(6);
    const std::size_t d_out = 1 + rng.uniform_index(6);
    const auto g = t::random_graph(n, 0.25, rng.next_u64());
    const auto adj = std::make_shared<const Adjacency>(Adjacency::incoming(g));
    Var x(t::random_tensor(n, d_in, rng), true);
    Var w(t::random_tensor(d_in, d_out, rng), true);
    Var bias(t::random_tensor(1, d_out, rng), true);
    const Tensor r_in = t::random_tensor(n, d_in, rng);
    const Tensor r_out = t::random_tensor(n, d_out, rng);
    record(t::gradient_check({&x, &w}, [&] { return probe(matmul(x, w), r_out); }));
    record(t::gradient_check({&x}, [&] { return probe(relu(x), r_in); }));
    record(t::gradient_check({&x}, [&] { return probe(sigmoid(x), r_in); }));
    record(t::gradient_check({&x}, [&] { return probe(mean_neighbors(x, adj), r_in); }));
    Var y(t::random_tensor(n, d_out, rng), true);
    record(t::gradient_check({&y, &bias}, [&] { return probe(add_row_bias(y, bias), r_out); }));

    ParamStore params;
    const auto dense = Dense::create(params, "dense", d_in, d_out, rng);
    const auto sage = SageConvLayer::create(params, "sage", d_in, d_out, rng);
    t::randomize(params, rng);
    record(t::gradient_check(params, [&] { return probe(dense.forward(params, x), r_out); }));
    record(t::gradient_check(params, [&] { return probe(sage.forward(params, x, adj), r_out); }));

    Var logits(t::random_tensor(n, 1, rng, 2.0), true);
    std::vector<double> labels;
    for (std::size_t i = 0; i < n; ++i) labels.push_back(rng.bernoulli(0.5) ? 1.0 : 0.0);
    record(t::gradient_check({&logits}, [&] { return bce_loss(sigmoid(logits), labels); }));
  }

  for (ModelKind kind : kAllModelKinds) {
    for (int cfg = 0; cfg < kConfigs; ++cfg) {
      Rng rng(derive_seed(8000 + static_cast<std::uint64_t>(kind), static_cast<std::uint64_t>(cfg)));
      const auto g = t::random_graph(8, 0.3, rng.next_u64());
      const std::size_t emb = 2 + rng.uniform_index(4);
      ModelInputs in;
      in.features = t::random_tensor(8, kNodeFeatureCount, rng);
      in.message = std::make_shared<const Adjacency>(Adjacency::incoming(g));
      in.semantic = t::random_tensor(8, emb, rng);
      ModelConfig mc;
      mc.kind = kind;
      mc.hidden_dim = 2 + rng.uniform_index(5);
      mc.mlp_hidden = {2 + rng.uniform_index(5), 2 + rng.uniform_index(4)};
      mc.seed = rng.next_u64();
      auto model = LinkModel::create(mc, emb);
      t::randomize(model.params(), rng);
      std::vector<NodePair> pairs;
      std::vector<double> labels;
      for (int i = 0; i < 12; ++i) {
        pairs.push_back({rng.uniform_index(8), rng.uniform_index(8)});
        labels.push_back(i % 2);
      }
      record(t::gradient_check(model.params(),
                               [&] { return bce_loss(model.forward(in, pairs), labels); }));
    }
  }
  c.note(std::to_string(checks) + " finite-difference checks, max rel err=" + fmt(worst));
  c.expect(worst <= 1e-4, "relative error <= 1e-4");
}

// Full pipeline on the default synthetic corpus in `root`.
struct PipelineRun {
  std::map<ModelKind, TrainReport> reports;
  std::vector<RiskReport> risk;
  double seconds = 0.0;
};

const std::vector<std::vector<std::string>>& determinism_queries(const EcosystemGraph& g) {
  static std::vector<std::vector<std::string>> queries;
  if (queries.empty()) {
    Rng rng(77);
    for (int i = 0; i < 5; ++i) {
      std::vector<std::string> lost;
      for (std::size_t k = 0; k <= rng.uniform_index(2); ++k) {
        lost.push_back(g.name(rng.uniform_index(g.node_count())));
      }
      queries.push_back(lost);
    }
  }
  return queries;
}

PipelineRun run_pipeline(const std::filesystem::path& root) {
  const auto start = Clock::now();
  PipelineRun run;
  save_cases(synthesize_cases(SynthConfig{}), root / "corpus.jsonl");
  Workspace ws(root / "ws");
  ws.ingest(root / "corpus.jsonl", CaseFilter{});
  ws.build();
  ws.metrics();
  ws.embed(EmbedOptions{});
  for (ModelKind kind : kAllModelKinds) {
    TrainOptions o;
    o.model.kind = kind;
    run.reports[kind] = ws.train(o);
  }
  run.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  const auto snap = ws.snapshot();
  for (const auto& lost : determinism_queries(snap->graph())) {
    for (ModelKind kind : kAllModelKinds) {
      RiskQuery q;
      q.lost_attributes = lost;
      q.model = kind;
      run.risk.push_back(snap->assess(q));
    }
  }
  return run;
}

void training(Criterion& c, const PipelineRun& run) {
  for (const auto& [kind, report] : run.reports) {
    c.note(std::string(model_kind_label(kind)) + "=" + fmt(report.best_accuracy));
  }
  c.note("pipeline " + fmt(run.seconds) + "s");
  c.expect(run.reports.at(ModelKind::kFeatureGcn).best_accuracy >= 0.75, "featureGCN >= 0.75");
  c.expect(run.reports.at(ModelKind::kSeeGcn).best_accuracy >= 0.75, "seeGCN >= 0.75");
  c.expect(run.reports.at(ModelKind::kFeatureMlp).best_accuracy >= 0.60, "featureMLP >= 0.60");
  c.expect(run.seconds <= 600.0, "within 10 minutes");
}

bool same_report(const TrainReport& a, const TrainReport& b) {
  return train_report_json(a) == train_report_json(b) && a.train_loss == b.train_loss &&
         a.val_accuracy == b.val_accuracy;
}

void determinism(Criterion& c, const PipelineRun& a, const PipelineRun& b) {
  for (ModelKind kind : kAllModelKinds) {
    c.expect(same_report(a.reports.at(kind), b.reports.at(kind)),
             std::string(model_kind_label(kind)) + " train report");
  }
  c.expect(a.risk == b.risk, "risk reports");
  c.note(std::to_string(a.reports.size()) + " train reports, " + std::to_string(a.risk.size()) +
         " risk reports compared");
}

void risk_brute_force(Criterion& c) {
  const auto g = t::random_graph(30, 0.12, 30);
  const auto split = random_link_split(g, 0.9, 0);
  ModelConfig cfg;
  cfg.kind = ModelKind::kFeatureGcn;
  cfg.epochs = 20;
  const TrainResult trained = train(g, cfg, split);
  const ModelInputs inputs = make_inputs(g, trained.model.standardization());
  const auto table = feature_table(g);
  const auto pr = t::pagerank_oracle(g);
  const auto rpr = t::pagerank_oracle(g.transpose());

  double worst = 0.0;
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    RiskQuery q;
    std::vector<NodeId> lost;
    const std::size_t k = 1 + rng.uniform_index(3);
    while (lost.size() < k) {
      const NodeId v = rng.uniform_index(30);
      if (std::find(lost.begin(), lost.end(), v) == lost.end()) {
        lost.push_back(v);
        q.lost_attributes.push_back(g.name(v));
      }
    }
    q.model = ModelKind::kFeatureGcn;
    const RiskReport report = assess(q, g, table, trained.model, inputs);

    // Recompute every row from single-pair model calls and the dense oracle.
    std::map<std::string, std::array<double, 4>> expected;
    double max_raw = 0.0;
    for (NodeId v = 0; v < 30; ++v) {
      if (std::find(lost.begin(), lost.end(), v) != lost.end()) continue;
      double p = 0.0;
      for (NodeId l : lost) {
        const NodePair pair{l, v};
        p = std::max(p, trained.model.score(inputs, std::span<const NodePair>(&pair, 1))[0].p);
      }
      const double s = pr[v] + rpr[v];
      expected[g.name(v)] = {p, s, p * s, 0.0};
      max_raw = std::max(max_raw, p * s);
    }
    for (auto& [name, row] : expected) row[3] = row[2] / max_raw * 100.0;

    c.expect(report.ranked.size() == 30 - k, "threshold-0 count is n - |lost|");
    c.expect(report.visible().size() == 30 - k, "visible at threshold 0");
    c.expect(!report.ranked.empty() && report.ranked.front().rs == 100.0, "top scores 100");
    for (const auto& cand : report.ranked) {
      const auto it = expected.find(cand.attribute);
      if (it == expected.end()) {
        c.expect(false, "unexpected candidate " + cand.attribute);
        continue;
      }
      const auto& row = it->second;
      worst = std::max({worst, std::abs(cand.p - row[0]), std::abs(cand.s - row[1]),
                        std::abs(cand.rs_raw - row[2]), std::abs(cand.rs - row[3]) / 100.0});
    }
    for (std::size_t i = 1; i < report.ranked.size(); ++i) {
      c.expect(report.ranked[i - 1].rs >= report.ranked[i].rs, "descending order");
    }
  }
  c.note("20 queries on a 30-node graph, max abs err=" + fmt(worst));
  c.expect(worst <= 1e-9, "matches brute force within 1e-9");
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("'") + PRIVRISK_CLI + "' " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char ch : s) {
    if (ch == '\'') {
      out += "'\\''";
    } else {
      out += ch;
    }
  }
  return out + "'";
}

void service_parity(Criterion& c, const std::filesystem::path& ws_root,
                    const std::filesystem::path& scratch) {
  const auto snap = Workspace(ws_root).snapshot();
  const EcosystemGraph& g = snap->graph();
  Service service(ws_root);
  const int port = service.start("127.0.0.1", 0);
  httplib::Client client("127.0.0.1", port);
  client.set_read_timeout(60, 0);

  Rng rng(99);
  const double thresholds[] = {0.0, 5.0, 12.5, 25.0, 50.0, 90.0};
  int matched = 0;
  for (int i = 0; i < 20; ++i) {
    std::vector<std::string> lost;
    const std::size_t k = 1 + rng.uniform_index(3);
    for (std::size_t j = 0; j < k; ++j) lost.push_back(g.name(rng.uniform_index(g.node_count())));
    const double threshold = thresholds[rng.uniform_index(6)];
    const ModelKind kind = kAllModelKinds[rng.uniform_index(std::size(kAllModelKinds))];

    nlohmann::json body = {{"lost", lost}, {"threshold", threshold},
                           {"model", std::string(model_kind_id(kind))}};
    const auto res = client.Post("/api/assess", body.dump(), "application/json");
    if (!res || res->status != 200) {
      c.expect(false, "HTTP query " + std::to_string(i));
      continue;
    }
    std::string joined;
    for (const auto& l : lost) joined += (joined.empty() ? "" : ",") + l;
    const auto out = scratch / ("parity_" + std::to_string(i) + ".json");
    std::ostringstream thr;
    thr.precision(17);
    thr << threshold;
    const int code = run_cli("-w " + shell_quote(ws_root.string()) + " assess --lost " +
                             shell_quote(joined) + " --threshold " + thr.str() + " --model " +
                             std::string(model_kind_id(kind)) + " --json " +
                             shell_quote(out.string()));
    const bool same = code == 0 && t::read_file(out) == res->body;
    c.expect(same, "query " + std::to_string(i) + " bytes differ");
    matched += same ? 1 : 0;
  }
  service.stop();
  c.note(std::to_string(matched) + "/20 queries byte-identical");
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](const std::string& name, const std::function<void(Criterion&)>& fn) {
    Criterion c;
    try {
      fn(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    failures += c.failed() ? 1 : 0;
    std::cout << (c.failed() ? "FAIL" : "PASS") << "  " << name << "  (" << c.detail() << ")"
              << std::endl;
  };

  report("graph-fidelity", graph_fidelity);
  report("disclosure-probabilities", disclosure);
  report("centrality-oracles", centrality);
  report("pagerank", pagerank_checks);
  report("gradient-checks", gradients);

  t::TempDir first;
  t::TempDir second;
  std::optional<PipelineRun> run_a;
  std::optional<PipelineRun> run_b;
  report("training-accuracy", [&](Criterion& c) {
    run_a = run_pipeline(first.path());
    training(c, *run_a);
  });
  report("determinism", [&](Criterion& c) {
    if (!run_a) throw Error(ErrorCode::kMissingState, "first pipeline run failed");
    run_b = run_pipeline(second.path());
    determinism(c, *run_a, *run_b);
  });
  report("risk-brute-force", risk_brute_force);
  report("service-cli-parity", [&](Criterion& c) {
    if (!run_a) throw Error(ErrorCode::kMissingState, "first pipeline run failed");
    service_parity(c, first.path() / "ws", first.path());
  });

  std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
  return failures == 0 ? 0 : 1;
}
