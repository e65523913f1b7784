#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "privrisk/ecograph.hpp"
#include "privrisk/metrics.hpp"
#include "privrisk/models.hpp"

namespace privrisk {

struct RiskQuery {
  std::vector<std::string> lost_attributes;
  double threshold = 0.0;  // on the normalized [0, 100] scale
  ModelKind model = ModelKind::kSeeGcn;
};

struct RiskCandidate {
  std::string attribute;
  NodeId node = 0;
  double p = 0.0;       // max link probability from any lost attribute
  double s = 0.0;       // pr + rpr
  double rs_raw = 0.0;  // p * s
  double rs = 0.0;      // rs_raw / max rs_raw * 100

  friend bool operator==(const RiskCandidate&, const RiskCandidate&) = default;
};

// All candidates ranked by rs descending (ties by attribute name); the
// threshold only affects `visible()` and the serialized form.
struct RiskReport {
  std::vector<std::string> lost;  // normalized, deduplicated, query order
  double threshold = 0.0;
  ModelKind model = ModelKind::kSeeGcn;
  std::vector<RiskCandidate> ranked;

  std::vector<RiskCandidate> visible() const;
  RiskReport with_threshold(double threshold) const;

  friend bool operator==(const RiskReport&, const RiskReport&) = default;
};

// Link probability for each (lost attribute, candidate) pair.
using LinkScorer = std::function<std::vector<double>(std::span<const NodePair>)>;

// pr_i + rpr_i
double structural_score(const NodeFeatureTable& table, NodeId node);

// Candidates are all nodes except the lost attributes. Throws kNotFound
// (with nearest-name suggestions) for an unresolved lost attribute.
RiskReport assess(const RiskQuery& query, const EcosystemGraph& g,
                  const NodeFeatureTable& table, const LinkScorer& scorer);

RiskReport assess(const RiskQuery& query, const EcosystemGraph& g,
                  const NodeFeatureTable& table, const LinkModel& model,
                  const ModelInputs& inputs);

// Replaces normalized scores of the listed attributes and re-ranks.
RiskReport manual_override(const RiskReport& report,
                           const std::map<std::string, double>& overrides);

// {"query": {...}, "candidates": [{attribute, p, s, rs_raw, rs}],
//  "threshold": t, "model": id}; candidates filtered by threshold.
std::string risk_report_json(const RiskReport& report);

// Fixed-width text table for terminals.
std::string risk_report_table(const RiskReport& report);

}  // namespace privrisk
