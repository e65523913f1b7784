#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "json.hpp"
#include "oracles.hpp"
#include "privrisk/error.hpp"
#include "privrisk/risk.hpp"
#include "test_support.hpp"

using namespace privrisk;
namespace t = privrisk::testing;

namespace {

// Deterministic pseudo-probability for a pair, independent of the library.
double fake_prob(NodePair p) {
  return 0.05 + 0.9 * static_cast<double>((p.source * 7919 + p.target * 104729) % 1000) / 1000.0;
}

LinkScorer fake_scorer() {
  return [](std::span<const NodePair> pairs) {
    std::vector<double> out;
    for (const auto& p : pairs) out.push_back(fake_prob(p));
    return out;
  };
}

struct OracleRow {
  std::string attribute;
  double p, s, rs_raw, rs;
};

// Straight recomputation of every formula from the dense PageRank oracle.
std::vector<OracleRow> brute_force(const EcosystemGraph& g, const std::vector<NodeId>& lost,
                                   const std::function<double(NodePair)>& prob) {
  const auto pr = t::pagerank_oracle(g);
  const auto rpr = t::pagerank_oracle(g.transpose());
  std::vector<OracleRow> rows;
  double max_raw = 0.0;
  for (NodeId v = 0; v < g.node_count(); ++v) {
    if (std::find(lost.begin(), lost.end(), v) != lost.end()) continue;
    double p = 0.0;
    for (NodeId l : lost) p = std::max(p, prob({l, v}));
    const double s = pr[v] + rpr[v];
    rows.push_back({g.name(v), p, s, p * s, 0.0});
    max_raw = std::max(max_raw, p * s);
  }
  for (auto& r : rows) r.rs = r.rs_raw / max_raw * 100.0;
  return rows;
}

}  // namespace

TEST_CASE("structural score closed forms") {
  for (std::size_t n : {3, 4, 9}) {
    const auto table = feature_table(t::bidirected_cycle(n));
    for (NodeId v = 0; v < n; ++v) {
      CHECK(std::abs(structural_score(table, v) - 2.0 / static_cast<double>(n)) <= 1e-10);
    }
  }
  const auto single = feature_table(EcosystemGraph::from_edges({"a"}, {}));
  CHECK(structural_score(single, 0) == 2.0);
  const auto g = t::three_case_graph();
  const auto table = feature_table(g);
  const auto pr = t::pagerank_oracle(g);
  const auto rpr = t::pagerank_oracle(g.transpose());
  for (NodeId v = 0; v < 7; ++v) {
    CHECK(std::abs(structural_score(table, v) - (pr[v] + rpr[v])) <= 1e-9);
  }
}

TEST_CASE("assess on a 30-node fixture equals the brute-force recomputation") {
  const auto g = t::random_graph(30, 0.12, 30);
  const auto table = feature_table(g);
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<NodeId> lost;
    RiskQuery q;
    const std::size_t k = 1 + rng.uniform_index(3);
    while (lost.size() < k) {
      const NodeId v = rng.uniform_index(30);
      if (std::find(lost.begin(), lost.end(), v) == lost.end()) {
        lost.push_back(v);
        q.lost_attributes.push_back(g.name(v));
      }
    }
    q.threshold = trial % 2 == 0 ? 0.0 : 75.0;
    const auto report = assess(q, g, table, fake_scorer());
    const auto oracle = brute_force(g, lost, fake_prob);
    REQUIRE(report.ranked.size() == 30 - k);
    for (const auto& row : oracle) {
      const auto it = std::find_if(report.ranked.begin(), report.ranked.end(),
                                   [&](const RiskCandidate& c) { return c.attribute == row.attribute; });
      REQUIRE(it != report.ranked.end());
      CHECK(std::abs(it->p - row.p) <= 1e-9);
      CHECK(std::abs(it->s - row.s) <= 1e-9);
      CHECK(std::abs(it->rs_raw - row.rs_raw) <= 1e-9);
      CHECK(std::abs(it->rs - row.rs) / 100.0 <= 1e-9);
    }
    CHECK(report.ranked.front().rs == 100.0);
    for (std::size_t i = 1; i < report.ranked.size(); ++i) {
      CHECK(report.ranked[i - 1].rs >= report.ranked[i].rs);
    }
    std::size_t expected_visible = 0;
    for (const auto& row : oracle) expected_visible += row.rs >= q.threshold ? 1 : 0;
    CHECK(report.visible().size() == expected_visible);
  }
}

TEST_CASE("threshold semantics") {
  const auto g = t::random_graph(25, 0.15, 4);
  const auto table = feature_table(g);
  RiskQuery q;
  q.lost_attributes = {g.name(0), g.name(1)};
  const auto report = assess(q, g, table, fake_scorer());
  CHECK(report.visible().size() == 23);
  const auto top = report.with_threshold(100.0).visible();
  REQUIRE(!top.empty());
  for (const auto& c : top) CHECK(c.rs_raw == report.ranked.front().rs_raw);
  CHECK_THROWS_AS(report.with_threshold(101.0), Error);
  q.threshold = -1.0;
  CHECK_THROWS_AS(assess(q, g, table, fake_scorer()), Error);
}

TEST_CASE("lost attributes never appear and duplicates collapse") {
  const auto g = t::three_case_graph();
  const auto table = feature_table(g);
  RiskQuery q;
  q.lost_attributes = {"Bank Account", "bank account", "name"};
  const auto report = assess(q, g, table, fake_scorer());
  CHECK(report.lost == std::vector<std::string>{"bank account", "name"});
  CHECK(report.ranked.size() == 5);
  for (const auto& c : report.ranked) {
    CHECK(c.attribute != "bank account");
    CHECK(c.attribute != "name");
  }
}

TEST_CASE("unknown lost attribute reports suggestions") {
  const auto g = t::three_case_graph();
  RiskQuery q;
  q.lost_attributes = {"bank acount"};
  try {
    assess(q, g, feature_table(g), fake_scorer());
    FAIL("unknown attribute accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNotFound);
    REQUIRE(!e.suggestions().empty());
    CHECK(e.suggestions().front() == "bank account");
  }
}

TEST_CASE("all-zero probabilities give all-zero scores") {
  const auto g = t::three_case_graph();
  RiskQuery q;
  q.lost_attributes = {"name"};
  const auto report = assess(q, g, feature_table(g), [](std::span<const NodePair> pairs) {
    return std::vector<double>(pairs.size(), 0.0);
  });
  for (const auto& c : report.ranked) CHECK(c.rs == 0.0);
  // Ties are ordered by name.
  for (std::size_t i = 1; i < report.ranked.size(); ++i) {
    CHECK(report.ranked[i - 1].attribute < report.ranked[i].attribute);
  }
}

TEST_CASE("assess is pure") {
  const auto g = t::random_graph(20, 0.2, 8);
  const auto table = feature_table(g);
  RiskQuery q;
  q.lost_attributes = {g.name(3)};
  q.threshold = 40.0;
  const auto a = assess(q, g, table, fake_scorer());
  CHECK(a == assess(q, g, table, fake_scorer()));
  CHECK(risk_report_json(a) == risk_report_json(assess(q, g, table, fake_scorer())));
}

TEST_CASE("raw-score order survives normalization") {
  const auto g = t::random_graph(40, 0.1, 9);
  RiskQuery q;
  q.lost_attributes = {g.name(0)};
  const auto report = assess(q, g, feature_table(g), fake_scorer());
  for (std::size_t i = 1; i < report.ranked.size(); ++i) {
    CHECK(report.ranked[i - 1].rs_raw >= report.ranked[i].rs_raw);
  }
}

TEST_CASE("manual overrides") {
  const auto g = t::random_graph(20, 0.2, 10);
  RiskQuery q;
  q.lost_attributes = {g.name(0)};
  const auto report = assess(q, g, feature_table(g), fake_scorer());
  CHECK(manual_override(report, {}) == report);

  const std::string last = report.ranked.back().attribute;
  const auto bumped = manual_override(report, {{last, 100.0}});
  CHECK(bumped.ranked[0].attribute == std::min(last, report.ranked[0].attribute));
  CHECK_THROWS_AS(manual_override(report, {{g.name(0), 50.0}}), Error);
  CHECK_THROWS_AS(manual_override(report, {{last, 150.0}}), Error);
}

TEST_CASE("override then threshold matches a naive recomputation") {
  const auto g = t::random_graph(30, 0.12, 11);
  const auto table = feature_table(g);
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    RiskQuery q;
    q.lost_attributes = {g.name(rng.uniform_index(30))};
    const auto report = assess(q, g, table, fake_scorer());
    std::map<std::string, double> overrides;
    for (int i = 0; i < 3; ++i) {
      const auto& c = report.ranked[rng.uniform_index(report.ranked.size())];
      overrides[c.attribute] = std::round(rng.uniform(0.0, 100.0));
    }
    const double threshold = std::round(rng.uniform(0.0, 100.0));
    const auto got = manual_override(report, overrides).with_threshold(threshold).visible();

    std::vector<std::pair<double, std::string>> naive;
    for (const auto& c : report.ranked) {
      const auto it = overrides.find(c.attribute);
      const double rs = it != overrides.end() ? it->second : c.rs;
      if (rs >= threshold) naive.push_back({-rs, c.attribute});
    }
    std::sort(naive.begin(), naive.end());
    REQUIRE(got.size() == naive.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].attribute == naive[i].second);
      CHECK(got[i].rs == -naive[i].first);
    }
  }
}

TEST_CASE("report JSON layout") {
  const auto g = t::three_case_graph();
  RiskQuery q;
  q.lost_attributes = {"name", "bank account"};
  q.threshold = 75.0;
  const auto report = assess(q, g, feature_table(g), fake_scorer());
  const auto text = risk_report_json(report);
  CHECK(text.back() == '\n');
  const auto doc = nlohmann::json::parse(text);
  CHECK(doc["query"]["lost"] == nlohmann::json({"name", "bank account"}));
  CHECK(doc["query"]["threshold"] == 75.0);
  CHECK(doc["model"] == "seegcn");
  CHECK(doc["candidates"].size() == report.visible().size());
  for (const auto& row : doc["candidates"]) {
    CHECK(row["rs"].get<double>() >= 75.0);
    CHECK(row.contains("p"));
    CHECK(row.contains("s"));
    CHECK(row.contains("rs_raw"));
  }
  const auto table = risk_report_table(report);
  CHECK(table.find("attribute") == 0);
  CHECK(table.find("candidates at threshold 75.00") != std::string::npos);
}

TEST_CASE("model-kind mismatch is refused") {
  const auto g = t::three_case_graph();
  ModelConfig cfg;
  cfg.kind = ModelKind::kFeatureMlp;
  const auto model = LinkModel::create(cfg);
  const auto inputs = make_inputs(g, standardize(feature_table(g)).params);
  RiskQuery q;
  q.lost_attributes = {"name"};
  q.model = ModelKind::kFeatureGcn;
  CHECK_THROWS_AS(assess(q, g, feature_table(g), model, inputs), Error);
  q.model = ModelKind::kFeatureMlp;
  const auto report = assess(q, g, feature_table(g), model, inputs);
  for (const auto& c : report.ranked) CHECK(c.p == 0.5);
}
