#include "privrisk/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "privrisk/error.hpp"
#include "privrisk/rng.hpp"
#include "privrisk/text.hpp"

namespace privrisk {

namespace {

using nlohmann::json;

[[noreturn]] void fail_line(std::size_t line_no, const std::string& reason) {
  throw Error(ErrorCode::kParse,
              "line " + std::to_string(line_no) + ": " + reason, line_no);
}

std::vector<std::string> read_attribute_list(const json& obj, const char* key,
                                             std::size_t line_no) {
  const auto it = obj.find(key);
  if (it == obj.end()) fail_line(line_no, std::string("missing \"") + key + "\"");
  if (!it->is_array()) {
    fail_line(line_no, std::string("\"") + key + "\" must be an array");
  }
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& item : *it) {
    if (!item.is_string()) {
      fail_line(line_no, std::string("\"") + key + "\" entries must be strings");
    }
    std::string name = normalize_attribute(item.get<std::string>());
    if (name.empty()) continue;
    if (seen.insert(name).second) out.push_back(std::move(name));
  }
  if (out.empty()) {
    fail_line(line_no,
              std::string("\"") + key + "\" is empty after normalization");
  }
  return out;
}

// Attribute names sort in index order: zero-padded to the widest index.
int attribute_width(std::int64_t n_attributes) {
  int width = 3;
  std::int64_t limit = 1000;
  while (n_attributes > limit) {
    ++width;
    limit *= 10;
  }
  return width;
}

std::vector<double> zipf_cumulative(std::span<const std::int64_t> members,
                                    std::span<const double> weight) {
  std::vector<double> cumulative;
  cumulative.reserve(members.size());
  double acc = 0.0;
  for (std::int64_t m : members) {
    acc += weight[static_cast<std::size_t>(m)];
    cumulative.push_back(acc);
  }
  return cumulative;
}

}  // namespace

void CaseFilter::validate() const {
  if (victim_age_range && victim_age_range->min > victim_age_range->max) {
    throw Error(ErrorCode::kInvalidArgument,
                "victim age range requires min <= max");
  }
  if (min_loss_usd && !std::isfinite(*min_loss_usd)) {
    throw Error(ErrorCode::kInvalidArgument, "min_loss_usd must be finite");
  }
}

bool CaseFilter::matches(const CaseRecord& record) const {
  if (min_loss_usd) {
    if (!record.loss_usd || !(*record.loss_usd > *min_loss_usd)) return false;
  }
  if (sector) {
    if (!record.sector || *record.sector != *sector) return false;
  }
  if (victim_age_range) {
    if (!record.victim_age || *record.victim_age < victim_age_range->min ||
        *record.victim_age > victim_age_range->max) {
      return false;
    }
  }
  return true;
}

CaseFilter CaseFilter::conjoin(const CaseFilter& other) const {
  CaseFilter out = *this;
  if (other.min_loss_usd) {
    out.min_loss_usd = out.min_loss_usd
                           ? std::max(*out.min_loss_usd, *other.min_loss_usd)
                           : *other.min_loss_usd;
  }
  if (other.sector) {
    if (out.sector && *out.sector != *other.sector) {
      throw Error(ErrorCode::kInvalidArgument,
                  "conjunction of two different sectors is unsatisfiable");
    }
    out.sector = other.sector;
  }
  if (other.victim_age_range) {
    if (out.victim_age_range) {
      AgeRange r{std::max(out.victim_age_range->min, other.victim_age_range->min),
                 std::min(out.victim_age_range->max, other.victim_age_range->max)};
      if (r.min > r.max) {
        throw Error(ErrorCode::kInvalidArgument,
                    "conjunction of disjoint age ranges is unsatisfiable");
      }
      out.victim_age_range = r;
    } else {
      out.victim_age_range = other.victim_age_range;
    }
  }
  return out;
}

void SynthConfig::validate() const {
  if (n_attributes < 1 || n_cases < 1 || n_communities < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "synth config counts must all be >= 1");
  }
  if (n_communities > n_attributes) {
    throw Error(ErrorCode::kInvalidArgument,
                "n_communities must not exceed n_attributes");
  }
  if (!(intra_community_bias >= 0.0 && intra_community_bias <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "intra_community_bias must lie in [0, 1]");
  }
}

CaseRecord parse_case_line(std::string_view line, std::size_t line_no) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    fail_line(line_no, std::string("bad JSON: ") + e.what());
  }
  if (!obj.is_object()) fail_line(line_no, "case must be a JSON object");

  CaseRecord rec;
  const auto id = obj.find("case_id");
  if (id == obj.end() || !id->is_string() || id->get<std::string>().empty()) {
    fail_line(line_no, "missing or empty \"case_id\"");
  }
  rec.case_id = id->get<std::string>();
  rec.inputs = read_attribute_list(obj, "inputs", line_no);
  rec.outputs = read_attribute_list(obj, "outputs", line_no);

  if (auto it = obj.find("loss_usd"); it != obj.end() && !it->is_null()) {
    if (!it->is_number() || !std::isfinite(it->get<double>()) ||
        it->get<double>() < 0.0) {
      fail_line(line_no, "\"loss_usd\" must be a non-negative number");
    }
    rec.loss_usd = it->get<double>();
  }
  if (auto it = obj.find("sector"); it != obj.end() && !it->is_null()) {
    if (!it->is_string()) fail_line(line_no, "\"sector\" must be a string");
    rec.sector = it->get<std::string>();
  }
  if (auto it = obj.find("victim_age"); it != obj.end() && !it->is_null()) {
    if (!it->is_number_integer() || it->get<std::int64_t>() < 0) {
      fail_line(line_no, "\"victim_age\" must be a non-negative integer");
    }
    rec.victim_age = it->get<std::int64_t>();
  }
  return rec;
}

std::string case_to_json_line(const CaseRecord& record) {
  json obj = json::object();
  obj["case_id"] = record.case_id;
  obj["inputs"] = record.inputs;
  obj["outputs"] = record.outputs;
  if (record.loss_usd) obj["loss_usd"] = *record.loss_usd;
  if (record.sector) obj["sector"] = *record.sector;
  if (record.victim_age) obj["victim_age"] = *record.victim_age;
  return obj.dump();
}

LoadResult load_cases(const std::filesystem::path& path, LoadMode mode) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot read case file " + path.string());
  }
  LoadResult result;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      CaseRecord rec = parse_case_line(line, line_no);
      if (!ids.insert(rec.case_id).second) {
        fail_line(line_no, "duplicate case_id \"" + rec.case_id + "\"");
      }
      result.records.push_back(std::move(rec));
    } catch (const Error& e) {
      if (mode == LoadMode::kStrict) throw;
      result.issues.push_back({line_no, e.what()});
    }
  }
  if (in.bad()) {
    throw Error(ErrorCode::kIo, "read failure on " + path.string());
  }
  return result;
}

void save_cases(const std::vector<CaseRecord>& cases,
                const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  for (const auto& rec : cases) out << case_to_json_line(rec) << '\n';
  if (!out) throw Error(ErrorCode::kIo, "write failure on " + path.string());
}

std::vector<CaseRecord> filter_cases(const std::vector<CaseRecord>& cases,
                                     const CaseFilter& filter) {
  filter.validate();
  std::vector<CaseRecord> out;
  std::copy_if(cases.begin(), cases.end(), std::back_inserter(out),
               [&](const CaseRecord& c) { return filter.matches(c); });
  return out;
}

const std::vector<std::string>& synth_sectors() {
  static const std::vector<std::string> kSectors = {
      "finance", "healthcare", "retail", "government", "education"};
  return kSectors;
}

std::int64_t synth_community(std::int64_t attribute_index,
                             std::int64_t n_communities) {
  return attribute_index % n_communities;
}

std::string synth_attribute_name(std::int64_t index, std::int64_t n_attributes) {
  std::string digits = std::to_string(index);
  const int width = attribute_width(n_attributes);
  if (static_cast<int>(digits.size()) < width) {
    digits.insert(0, static_cast<std::size_t>(width) - digits.size(), '0');
  }
  return "attr_" + digits;
}

std::vector<CaseRecord> synthesize_cases(const SynthConfig& config) {
  config.validate();
  const std::int64_t n = config.n_attributes;
  const std::int64_t k = config.n_communities;

  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    names.push_back(synth_attribute_name(i, n));
  }
  std::vector<std::vector<std::int64_t>> members(static_cast<std::size_t>(k));
  std::vector<std::int64_t> everyone(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    members[static_cast<std::size_t>(synth_community(i, k))].push_back(i);
    everyone[static_cast<std::size_t>(i)] = i;
  }

  // Heavy-tailed propensities: a few attributes are commonly used as inputs
  // (or commonly exposed as outputs), most are rare. Input and output
  // popularity use independent rankings.
  Rng rank_rng(derive_seed(config.seed, 1));
  auto propensity = [&](Rng& rng) {
    std::vector<std::int64_t> order = everyone;
    rng.shuffle(std::span<std::int64_t>(order));
    std::vector<double> w(static_cast<std::size_t>(n));
    for (std::int64_t r = 0; r < n; ++r) {
      w[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] =
          1.0 / std::pow(static_cast<double>(r) + 1.0, kSynthZipfExponent);
    }
    return w;
  };
  std::vector<double> in_weight = propensity(rank_rng);
  const std::vector<double> out_weight = propensity(rank_rng);

  // Communities differ in how often they are targeted at all, so a node's
  // neighborhood profile says something about its community.
  std::vector<std::int64_t> comm_order(static_cast<std::size_t>(k));
  for (std::int64_t c = 0; c < k; ++c) comm_order[static_cast<std::size_t>(c)] = c;
  rank_rng.shuffle(std::span<std::int64_t>(comm_order));
  std::vector<double> activity(static_cast<std::size_t>(k));
  for (std::int64_t r = 0; r < k; ++r) {
    activity[static_cast<std::size_t>(comm_order[static_cast<std::size_t>(r)])] =
        1.0 / std::pow(static_cast<double>(r) + 1.0, kSynthZipfExponent);
  }
  for (std::int64_t i = 0; i < n; ++i) {
    in_weight[static_cast<std::size_t>(i)] *=
        activity[static_cast<std::size_t>(synth_community(i, k))];
  }

  const std::vector<double> all_in = zipf_cumulative(everyone, in_weight);
  std::vector<std::vector<double>> comm_in;
  std::vector<std::vector<double>> comm_out;
  for (const auto& m : members) {
    comm_in.push_back(zipf_cumulative(m, in_weight));
    comm_out.push_back(zipf_cumulative(m, out_weight));
  }

  Rng rng(derive_seed(config.seed, 2));
  const auto& sectors = synth_sectors();
  const int id_width = std::max<int>(6, static_cast<int>(
                                            std::to_string(config.n_cases).size()));
  std::vector<CaseRecord> cases;
  cases.reserve(static_cast<std::size_t>(config.n_cases));
  for (std::int64_t c = 0; c < config.n_cases; ++c) {
    CaseRecord rec;
    std::string id = std::to_string(c + 1);
    id.insert(0, static_cast<std::size_t>(id_width) - id.size(), '0');
    rec.case_id = "synth-" + id;

    const auto n_in = rng.uniform_int(1, 3);
    const auto n_out = rng.uniform_int(1, 3);
    const std::int64_t first = everyone[rng.weighted_index(all_in)];
    const auto comm = static_cast<std::size_t>(synth_community(first, k));

    std::vector<std::int64_t> inputs{first};
    for (std::int64_t i = 1; i < n_in; ++i) {
      if (rng.bernoulli(config.intra_community_bias)) {
        inputs.push_back(members[comm][rng.weighted_index(comm_in[comm])]);
      } else {
        inputs.push_back(everyone[rng.weighted_index(all_in)]);
      }
    }
    std::vector<std::int64_t> outputs;
    for (std::int64_t i = 0; i < n_out; ++i) {
      if (rng.bernoulli(config.intra_community_bias)) {
        outputs.push_back(members[comm][rng.weighted_index(comm_out[comm])]);
      } else {
        outputs.push_back(static_cast<std::int64_t>(
            rng.uniform_index(static_cast<std::uint64_t>(n))));
      }
    }
    auto to_names = [&](const std::vector<std::int64_t>& ids) {
      std::vector<std::string> out;
      for (auto i : ids) {
        const auto& name = names[static_cast<std::size_t>(i)];
        if (std::find(out.begin(), out.end(), name) == out.end()) {
          out.push_back(name);
        }
      }
      return out;
    };
    rec.inputs = to_names(inputs);
    rec.outputs = to_names(outputs);
    rec.loss_usd = std::round(rng.uniform(100.0, 50000.0) * 100.0) / 100.0;
    rec.sector = sectors[rng.uniform_index(sectors.size())];
    rec.victim_age = rng.uniform_int(18, 90);
    cases.push_back(std::move(rec));
  }
  return cases;
}

}  // namespace privrisk
