#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "privrisk/ecograph.hpp"
#include "privrisk/tensor.hpp"

namespace privrisk {

// Word -> single definition. Lookups of absent words are misses.
class Lexicon {
 public:
  Lexicon() = default;

  // Keys are normalized; empty definitions are rejected.
  void add(std::string_view word, std::string_view definition);
  std::optional<std::string_view> lookup(std::string_view word) const;
  std::size_t size() const { return entries_.size(); }
  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

// Common PII vocabulary shipped with the library.
const Lexicon& builtin_lexicon();

// word<TAB>definition per line; blank lines and '#' comments skipped.
Lexicon load_lexicon_tsv(const std::filesystem::path& path);
Lexicon parse_lexicon_tsv(std::string_view text);

// Word-by-word expansion: each word is replaced by its definition, or kept
// verbatim on a miss; joined with single spaces.
std::string contextualize(std::string_view attribute, const Lexicon& lexicon);

enum class EmbeddingProviderKind { kHashed, kExternal };

struct EmbeddingProviderConfig {
  EmbeddingProviderKind provider = EmbeddingProviderKind::kHashed;
  std::size_t embedding_dim = 128;
  std::size_t max_token_len = 124;
  std::optional<std::filesystem::path> external_path;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SemanticEmbedding {
  std::string attribute;
  std::vector<double> vector;

  friend bool operator==(const SemanticEmbedding&,
                         const SemanticEmbedding&) = default;
};

// Hashed bag-of-tokens embedding: whitespace tokens truncated to
// max_token_len, each mapped to a seeded unit-norm pseudo-random vector,
// mean-pooled and rescaled to unit L2 norm. Empty context -> zero vector.
std::vector<double> hashed_embedding(std::string_view context,
                                     const EmbeddingProviderConfig& config);

// attribute -> vector table in the external embedding file format:
//   dim=<D>
//   attribute<TAB>v1,v2,...,vD
struct ExternalEmbeddings {
  std::size_t dim = 0;
  std::map<std::string, std::vector<double>> vectors;
};

ExternalEmbeddings load_external_embeddings(const std::filesystem::path& path);
void save_external_embeddings(const std::vector<SemanticEmbedding>& embeddings,
                              const std::filesystem::path& path);

class EmbeddingProvider {
 public:
  // Loads the external file up front for the external provider.
  explicit EmbeddingProvider(EmbeddingProviderConfig config);

  // External lookups are keyed by attribute; the hashed path uses context.
  SemanticEmbedding embed(std::string_view attribute,
                          std::string_view context) const;

  const EmbeddingProviderConfig& config() const { return config_; }

 private:
  EmbeddingProviderConfig config_;
  std::optional<ExternalEmbeddings> external_;
};

// Index i holds the embedding of node i.
std::vector<SemanticEmbedding> embed_all(const EcosystemGraph& g,
                                         const Lexicon& lexicon,
                                         const EmbeddingProvider& provider);

// n x dim matrix in node order.
Tensor embedding_matrix(const std::vector<SemanticEmbedding>& embeddings);

}  // namespace privrisk
