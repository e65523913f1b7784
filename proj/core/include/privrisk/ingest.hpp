#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace privrisk {

// One identity theft/fraud case. Attribute lists are normalized and
// deduplicated (first occurrence kept) and never empty.
struct CaseRecord {
  std::string case_id;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::optional<double> loss_usd;
  std::optional<std::string> sector;
  std::optional<std::int64_t> victim_age;

  friend bool operator==(const CaseRecord&, const CaseRecord&) = default;
};

struct AgeRange {
  std::int64_t min = 0;
  std::int64_t max = 0;
  friend bool operator==(const AgeRange&, const AgeRange&) = default;
};

// Conjunction of optional criteria. A case missing a field that an active
// criterion targets does not match.
struct CaseFilter {
  std::optional<double> min_loss_usd;  // strict: loss > min
  std::optional<std::string> sector;
  std::optional<AgeRange> victim_age_range;

  void validate() const;
  bool matches(const CaseRecord& record) const;
  bool empty() const {
    return !min_loss_usd && !sector && !victim_age_range;
  }

  // Combined filter that matches exactly when both operands match.
  // Throws kInvalidArgument when the sectors disagree.
  CaseFilter conjoin(const CaseFilter& other) const;
};

// Exponent of the power-law input/output propensities in the synthesizer.
inline constexpr double kSynthZipfExponent = 1.0;

struct SynthConfig {
  std::int64_t n_attributes = 300;
  std::int64_t n_cases = 2000;
  std::int64_t n_communities = 10;
  double intra_community_bias = 0.9;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class LoadMode {
  kStrict,   // throw on the first malformed line
  kLenient,  // skip malformed lines and report them
};

struct LoadIssue {
  std::size_t line = 0;
  std::string reason;
};

struct LoadResult {
  std::vector<CaseRecord> records;
  std::vector<LoadIssue> issues;
};

// Parses one JSONL line; throws Error(kParse) with the given line number.
CaseRecord parse_case_line(std::string_view line, std::size_t line_no);
std::string case_to_json_line(const CaseRecord& record);

// Blank lines are ignored. Duplicate case ids are malformed.
LoadResult load_cases(const std::filesystem::path& path,
                      LoadMode mode = LoadMode::kStrict);
void save_cases(const std::vector<CaseRecord>& cases,
                const std::filesystem::path& path);

std::vector<CaseRecord> filter_cases(const std::vector<CaseRecord>& cases,
                                     const CaseFilter& filter);

// Community-structured synthetic corpus; byte-identical per seed.
std::vector<CaseRecord> synthesize_cases(const SynthConfig& config);

// Fixed sector vocabulary used by the synthesizer.
const std::vector<std::string>& synth_sectors();

// Community index of a synthetic attribute "attr_NNN" (round-robin).
std::int64_t synth_community(std::int64_t attribute_index,
                             std::int64_t n_communities);
// "attr_007"; zero-padded to at least 3 digits, wider for large corpora.
std::string synth_attribute_name(std::int64_t index, std::int64_t n_attributes);

}  // namespace privrisk
