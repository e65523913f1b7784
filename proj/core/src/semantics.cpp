#include "privrisk/semantics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "privrisk/error.hpp"
#include "privrisk/rng.hpp"
#include "privrisk/text.hpp"

namespace privrisk {

namespace {

// First-sense dictionary glosses for words that commonly make up PII
// attribute names.
constexpr std::pair<std::string_view, std::string_view> kBuiltinEntries[] = {
    {"account", "a formal contractual relationship established to provide for regular banking or brokerage or business services"},
    {"address", "the place where a person or organization can be found or communicated with"},
    {"age", "how long something has existed"},
    {"atm", "an unattended machine that dispenses money when a personal coded card is used"},
    {"bank", "a financial institution that accepts deposits and channels the money into lending activities"},
    {"biometric", "relating to the measurement and analysis of biological data"},
    {"birth", "the time when something begins"},
    {"card", "a rectangular piece of stiff paper or plastic used to send messages or to identify the holder"},
    {"certificate", "a document attesting to the truth of certain stated facts"},
    {"citizenship", "the status of a citizen with rights and duties"},
    {"code", "a coding system used for transmitting messages requiring brevity or secrecy"},
    {"credential", "a document attesting to the truth of certain stated facts"},
    {"credit", "money available for a client to borrow"},
    {"criminal", "someone who has committed a crime or has been legally convicted of a crime"},
    {"date", "the specified day of the month"},
    {"debit", "an accounting entry acknowledging sums that are owing"},
    {"device", "an instrumentality invented for a particular purpose"},
    {"dna", "a nucleic acid that carries the genetic information in cells"},
    {"driver", "the operator of a motor vehicle"},
    {"education", "knowledge acquired by learning and instruction"},
    {"email", "a system of world-wide electronic communication"},
    {"employee", "a worker who is hired to perform a job"},
    {"employer", "a person or firm that employs workers"},
    {"employment", "the occupation for which you are paid"},
    {"face", "the front of the human head from the forehead to the chin and ear to ear"},
    {"facial", "of or concerning the face"},
    {"family", "a social unit living together"},
    {"fingerprint", "a print made by an impression of the ridges in the skin of a finger"},
    {"gender", "the properties that distinguish organisms on the basis of their reproductive roles"},
    {"gps", "a navigational system involving satellites and computers that can determine position"},
    {"health", "a healthy state of wellbeing free from disease"},
    {"history", "a record or narrative description of past events"},
    {"home", "where you live at a particular time"},
    {"id", "a card or badge used to identify the bearer"},
    {"identification", "evidence of identity"},
    {"image", "a visual representation produced on a surface"},
    {"income", "the financial gain accrued over a given period of time"},
    {"information", "knowledge acquired through study or experience or instruction"},
    {"insurance", "a contract whereby one party undertakes to indemnify or guarantee another against loss"},
    {"ip", "a numerical label assigned to each device connected to a computer network"},
    {"license", "a legal document giving official permission to do something"},
    {"location", "a point or extent in space"},
    {"login", "the act of identifying yourself to a computer system"},
    {"maiden", "an unmarried girl especially a virgin"},
    {"marital", "of or relating to the state of marriage"},
    {"medical", "relating to the study or practice of medicine"},
    {"mobile", "moving or capable of moving readily"},
    {"mother", "a woman who has given birth to a child"},
    {"name", "a language unit by which a person or thing is known"},
    {"number", "a numeral or string of numerals that is used for identification"},
    {"online", "connected to a computer network or accessible by computer"},
    {"passport", "a document issued by a country to a citizen allowing that person to travel abroad and re-enter the home country"},
    {"password", "a secret word or combination of letters or numbers used for authentication"},
    {"payment", "a sum of money paid or a claim discharged"},
    {"personal", "concerning or affecting a particular person or his or her private life and personal affairs"},
    {"phone", "electronic equipment that converts sound into electrical signals that can be transmitted over distances"},
    {"photo", "a representation of a person or scene in the form of a print or transparent slide"},
    {"pin", "a secret number used to verify the identity of a card holder"},
    {"place", "a point located with respect to surface features of some region"},
    {"policy", "a written contract or certificate of insurance"},
    {"record", "anything providing permanent evidence of or information about past events"},
    {"routing", "the act of determining a path for the transfer of funds or data"},
    {"salary", "something that remunerates"},
    {"security", "the state of being free from danger or injury"},
    {"signature", "your name written in your own handwriting"},
    {"social", "relating to human society and its members"},
    {"statement", "a document showing credits and debits"},
    {"tax", "charge against a citizen's person or property or activity for the support of government"},
    {"username", "a name used to identify a user of a computer system"},
    {"vehicle", "a conveyance that transports people or objects"},
    {"voice", "the distinctive quality or pitch or condition of a person's speech"},
};

[[noreturn]] void fail_line(std::size_t line_no, const std::string& reason) {
  throw Error(ErrorCode::kParse,
              "line " + std::to_string(line_no) + ": " + reason, line_no);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// Unit-norm Gaussian vector derived from (token, seed).
std::vector<double> token_vector(std::string_view token, std::size_t dim,
                                 std::uint64_t seed) {
  Rng rng(derive_seed(seed, fnv1a64(token)));
  std::vector<double> v(dim);
  for (std::size_t i = 0; i < dim; i += 2) {
    // Box-Muller; 1 - u keeps the log argument in (0, 1].
    const double u1 = 1.0 - rng.uniform01();
    const double u2 = rng.uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    v[i] = r * std::cos(2.0 * std::numbers::pi * u2);
    if (i + 1 < dim) v[i + 1] = r * std::sin(2.0 * std::numbers::pi * u2);
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

}  // namespace

void Lexicon::add(std::string_view word, std::string_view definition) {
  std::string key = normalize_attribute(word);
  std::string def = trim(definition);
  if (key.empty() || def.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "lexicon entries need a word and a non-empty definition");
  }
  entries_.insert_or_assign(std::move(key), std::move(def));
}

std::optional<std::string_view> Lexicon::lookup(std::string_view word) const {
  const auto it = entries_.find(std::string(word));
  if (it == entries_.end()) return std::nullopt;
  return std::string_view(it->second);
}

const Lexicon& builtin_lexicon() {
  static const Lexicon kLexicon = [] {
    Lexicon lex;
    for (const auto& [word, def] : kBuiltinEntries) lex.add(word, def);
    return lex;
  }();
  return kLexicon;
}

Lexicon parse_lexicon_tsv(std::string_view text) {
  Lexicon lex;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) fail_line(line_no, "expected word<TAB>definition");
    const std::string word = trim(std::string_view(line).substr(0, tab));
    const std::string def = trim(std::string_view(line).substr(tab + 1));
    if (word.empty() || def.empty()) {
      fail_line(line_no, "empty word or definition");
    }
    lex.add(word, def);
  }
  return lex;
}

Lexicon load_lexicon_tsv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read lexicon " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_lexicon_tsv(buf.str());
}

std::string contextualize(std::string_view attribute, const Lexicon& lexicon) {
  std::string out;
  for (const auto& word : split_whitespace(attribute)) {
    if (!out.empty()) out.push_back(' ');
    if (auto def = lexicon.lookup(word)) {
      out += *def;
    } else {
      out += word;
    }
  }
  return out;
}

void EmbeddingProviderConfig::validate() const {
  if (embedding_dim < 1) {
    throw Error(ErrorCode::kInvalidArgument, "embedding_dim must be >= 1");
  }
  if (max_token_len < 1) {
    throw Error(ErrorCode::kInvalidArgument, "max_token_len must be >= 1");
  }
  if (provider == EmbeddingProviderKind::kExternal && !external_path) {
    throw Error(ErrorCode::kInvalidArgument,
                "external embedding provider requires external_path");
  }
}

std::vector<double> hashed_embedding(std::string_view context,
                                     const EmbeddingProviderConfig& config) {
  config.validate();
  std::vector<std::string> tokens = split_whitespace(context);
  if (tokens.size() > config.max_token_len) tokens.resize(config.max_token_len);
  std::vector<double> v(config.embedding_dim, 0.0);
  if (tokens.empty()) return v;
  for (const auto& tok : tokens) {
    const auto tv = token_vector(tok, config.embedding_dim, config.seed);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += tv[i];
  }
  double norm = 0.0;
  for (double& x : v) {
    x /= static_cast<double>(tokens.size());
    norm += x * x;
  }
  norm = std::sqrt(norm);
  if (norm > 0.0) {
    for (double& x : v) x /= norm;
  }
  return v;
}

ExternalEmbeddings load_external_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIo, "cannot read embedding file " + path.string());
  }
  ExternalEmbeddings ext;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!have_header) {
      if (line.rfind("dim=", 0) != 0) fail_line(line_no, "expected dim=<D> header");
      try {
        std::size_t used = 0;
        const long long d = std::stoll(line.substr(4), &used);
        if (used != line.size() - 4 || d < 1) throw std::invalid_argument("dim");
        ext.dim = static_cast<std::size_t>(d);
      } catch (const std::exception&) {
        fail_line(line_no, "bad dim header");
      }
      have_header = true;
      continue;
    }
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) fail_line(line_no, "expected attribute<TAB>values");
    std::string attribute = normalize_attribute(line.substr(0, tab));
    std::vector<double> values;
    std::string_view rest(line);
    rest.remove_prefix(tab + 1);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const std::string field(rest.substr(0, comma));
      try {
        std::size_t used = 0;
        values.push_back(std::stod(field, &used));
        if (used != field.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        fail_line(line_no, "bad number \"" + field + "\"");
      }
      if (!std::isfinite(values.back())) fail_line(line_no, "non-finite value");
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (values.size() != ext.dim) {
      throw Error(ErrorCode::kShapeMismatch,
                  "line " + std::to_string(line_no) + ": expected " +
                      std::to_string(ext.dim) + " values, got " +
                      std::to_string(values.size()),
                  line_no);
    }
    ext.vectors.insert_or_assign(std::move(attribute), std::move(values));
  }
  if (!have_header) throw Error(ErrorCode::kParse, "empty embedding file", 1);
  return ext;
}

void save_external_embeddings(const std::vector<SemanticEmbedding>& embeddings,
                              const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  const std::size_t dim = embeddings.empty() ? 0 : embeddings.front().vector.size();
  out << "dim=" << dim << '\n';
  char buf[32];
  for (const auto& e : embeddings) {
    out << e.attribute << '\t';
    for (std::size_t i = 0; i < e.vector.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", e.vector[i]);
      if (i) out << ',';
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "write failure on " + path.string());
}

EmbeddingProvider::EmbeddingProvider(EmbeddingProviderConfig config)
    : config_(std::move(config)) {
  config_.validate();
  if (config_.provider == EmbeddingProviderKind::kExternal) {
    external_ = load_external_embeddings(*config_.external_path);
    if (external_->dim != config_.embedding_dim) {
      throw Error(ErrorCode::kShapeMismatch,
                  "external embeddings have dim " + std::to_string(external_->dim) +
                      ", configured embedding_dim is " +
                      std::to_string(config_.embedding_dim));
    }
  }
}

SemanticEmbedding EmbeddingProvider::embed(std::string_view attribute,
                                           std::string_view context) const {
  SemanticEmbedding out{std::string(attribute), {}};
  if (!external_) {
    out.vector = hashed_embedding(context, config_);
    return out;
  }
  const auto it = external_->vectors.find(normalize_attribute(attribute));
  if (it == external_->vectors.end()) {
    throw Error(ErrorCode::kNotFound,
                "attribute \"" + std::string(attribute) +
                    "\" missing from external embedding file");
  }
  out.vector = it->second;
  return out;
}

std::vector<SemanticEmbedding> embed_all(const EcosystemGraph& g,
                                         const Lexicon& lexicon,
                                         const EmbeddingProvider& provider) {
  std::vector<SemanticEmbedding> out;
  out.reserve(g.node_count());
  for (const auto& name : g.names()) {
    out.push_back(provider.embed(name, contextualize(name, lexicon)));
  }
  return out;
}

Tensor embedding_matrix(const std::vector<SemanticEmbedding>& embeddings) {
  const std::size_t dim = embeddings.empty() ? 0 : embeddings.front().vector.size();
  Tensor m(embeddings.size(), dim);
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    if (embeddings[i].vector.size() != dim) {
      throw Error(ErrorCode::kShapeMismatch, "inconsistent embedding dimensions");
    }
    std::copy(embeddings[i].vector.begin(), embeddings[i].vector.end(),
              m.row(i).begin());
  }
  return m;
}

}  // namespace privrisk
