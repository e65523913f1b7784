#include "privrisk/risk.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "json.hpp"
#include "privrisk/error.hpp"
#include "privrisk/text.hpp"

namespace privrisk {

namespace {

void rank(std::vector<RiskCandidate>& candidates) {
  std::sort(candidates.begin(), candidates.end(),
            [](const RiskCandidate& a, const RiskCandidate& b) {
              if (a.rs != b.rs) return a.rs > b.rs;
              return a.attribute < b.attribute;
            });
}

void check_threshold(double threshold) {
  if (!(threshold >= 0.0 && threshold <= 100.0)) {
    throw Error(ErrorCode::kInvalidArgument, "threshold must lie in [0, 100]");
  }
}

}  // namespace

std::vector<RiskCandidate> RiskReport::visible() const {
  std::vector<RiskCandidate> out;
  for (const auto& c : ranked) {
    if (c.rs >= threshold) out.push_back(c);
  }
  return out;
}

RiskReport RiskReport::with_threshold(double t) const {
  check_threshold(t);
  RiskReport out = *this;
  out.threshold = t;
  return out;
}

double structural_score(const NodeFeatureTable& table, NodeId node) {
  if (node >= table.pagerank.size() || node >= table.reverse_pagerank.size()) {
    throw Error(ErrorCode::kNotFound, "unknown node id " + std::to_string(node));
  }
  return table.pagerank[node] + table.reverse_pagerank[node];
}

RiskReport assess(const RiskQuery& query, const EcosystemGraph& g,
                  const NodeFeatureTable& table, const LinkScorer& scorer) {
  check_threshold(query.threshold);
  if (query.lost_attributes.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "at least one lost attribute is required");
  }
  if (table.size() != g.node_count()) {
    throw Error(ErrorCode::kStateMismatch, "feature table does not match graph");
  }
  RiskReport report;
  report.threshold = query.threshold;
  report.model = query.model;
  std::vector<NodeId> lost_ids;
  for (const auto& raw : query.lost_attributes) {
    const NodeId id = g.resolve(raw);
    if (std::find(lost_ids.begin(), lost_ids.end(), id) == lost_ids.end()) {
      lost_ids.push_back(id);
      report.lost.push_back(g.name(id));
    }
  }

  std::vector<NodeId> candidates;
  for (NodeId v = 0; v < g.node_count(); ++v) {
    if (std::find(lost_ids.begin(), lost_ids.end(), v) == lost_ids.end()) {
      candidates.push_back(v);
    }
  }
  std::vector<NodePair> pairs;
  pairs.reserve(candidates.size() * lost_ids.size());
  for (NodeId lost : lost_ids) {
    for (NodeId c : candidates) pairs.push_back({lost, c});
  }
  const std::vector<double> probs = scorer(pairs);
  if (probs.size() != pairs.size()) {
    throw Error(ErrorCode::kShapeMismatch, "scorer returned the wrong number of scores");
  }

  double max_raw = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    RiskCandidate c;
    c.node = candidates[i];
    c.attribute = g.name(c.node);
    c.p = probs[i];
    for (std::size_t l = 1; l < lost_ids.size(); ++l) {
      c.p = std::max(c.p, probs[l * candidates.size() + i]);
    }
    c.s = structural_score(table, c.node);
    c.rs_raw = c.p * c.s;
    max_raw = std::max(max_raw, c.rs_raw);
    report.ranked.push_back(std::move(c));
  }
  for (auto& c : report.ranked) {
    c.rs = max_raw > 0.0 ? c.rs_raw / max_raw * 100.0 : 0.0;
  }
  rank(report.ranked);
  return report;
}

RiskReport assess(const RiskQuery& query, const EcosystemGraph& g,
                  const NodeFeatureTable& table, const LinkModel& model,
                  const ModelInputs& inputs) {
  if (model.kind() != query.model) {
    throw Error(ErrorCode::kStateMismatch,
                "query asks for " + std::string(model_kind_id(query.model)) +
                    " but the checkpoint is " + std::string(model_kind_id(model.kind())));
  }
  return assess(query, g, table, [&](std::span<const NodePair> pairs) {
    std::vector<double> out;
    out.reserve(pairs.size());
    for (const auto& s : model.score(inputs, pairs)) out.push_back(s.p);
    return out;
  });
}

RiskReport manual_override(const RiskReport& report,
                           const std::map<std::string, double>& overrides) {
  RiskReport out = report;
  for (const auto& [raw_name, score] : overrides) {
    if (!(score >= 0.0 && score <= 100.0)) {
      throw Error(ErrorCode::kInvalidArgument, "override scores must lie in [0, 100]");
    }
    const std::string name = normalize_attribute(raw_name);
    auto it = std::find_if(out.ranked.begin(), out.ranked.end(),
                           [&](const RiskCandidate& c) { return c.attribute == name; });
    if (it == out.ranked.end()) {
      std::vector<std::string> names;
      for (const auto& c : out.ranked) names.push_back(c.attribute);
      throw Error(ErrorCode::kNotFound,
                  "\"" + raw_name + "\" is not a candidate in this report",
                  nearest_names(name, names));
    }
    it->rs = score;
  }
  rank(out.ranked);
  return out;
}

std::string risk_report_json(const RiskReport& report) {
  using nlohmann::ordered_json;
  ordered_json query = ordered_json::object();
  query["lost"] = report.lost;
  query["threshold"] = report.threshold;
  query["model"] = std::string(model_kind_id(report.model));
  ordered_json candidates = ordered_json::array();
  for (const auto& c : report.visible()) {
    ordered_json row = ordered_json::object();
    row["attribute"] = c.attribute;
    row["p"] = c.p;
    row["s"] = c.s;
    row["rs_raw"] = c.rs_raw;
    row["rs"] = c.rs;
    candidates.push_back(std::move(row));
  }
  ordered_json doc = ordered_json::object();
  doc["query"] = std::move(query);
  doc["candidates"] = std::move(candidates);
  doc["threshold"] = report.threshold;
  doc["model"] = std::string(model_kind_id(report.model));
  return doc.dump(2) + "\n";
}

std::string risk_report_table(const RiskReport& report) {
  std::size_t width = 9;
  const auto rows = report.visible();
  for (const auto& c : rows) width = std::max(width, c.attribute.size());
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-*s  %8s  %10s  %7s\n", static_cast<int>(width),
                "attribute", "p", "S", "RS");
  out += buf;
  for (const auto& c : rows) {
    std::snprintf(buf, sizeof(buf), "%-*s  %8.4f  %10.6f  %7.2f\n",
                  static_cast<int>(width), c.attribute.c_str(), c.p, c.s, c.rs);
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "%zu of %zu candidates at threshold %.2f\n",
                rows.size(), report.ranked.size(), report.threshold);
  out += buf;
  return out;
}

}  // namespace privrisk
