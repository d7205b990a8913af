// SPDX-License-Identifier: Apache-2.0
//
// Tweet preprocessing: normalization, tokenization, stopword removal, drug
// masking, vocabulary construction and pretrained embedding loading.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "adr/numerics.hpp"

namespace adr {

inline constexpr std::string_view kPadToken = "<PAD>";
inline constexpr std::string_view kUnkToken = "<UNK>";
inline constexpr std::string_view kLinkToken = "<LINK>";
inline constexpr std::string_view kUserToken = "<USER>";
inline constexpr std::string_view kDrugToken = "<DRUG>";

// Sentinels in vocabulary index order. PAD is always 0.
inline constexpr std::string_view kSentinels[] = {kPadToken, kUnkToken, kLinkToken,
                                                  kUserToken, kDrugToken};
inline constexpr std::size_t kSentinelCount = std::size(kSentinels);
inline constexpr int kPadIndex = 0;
inline constexpr int kUnkIndex = 1;
inline constexpr int kDrugIndex = 4;

bool is_sentinel(std::string_view token);

using TokenList = std::vector<std::string>;

struct TokenizedTweet {
  TokenList tokens;
  std::string source_id;
};

// URLs become <LINK>, @handles become <USER>, then punctuation and non-ASCII
// bytes are stripped and everything is lowercased. Whitespace is collapsed.
std::string normalize(std::string_view raw);

// Same rules for a single whitespace-free token. May return "".
std::string normalize_token(std::string_view raw_token);

TokenList tokenize(std::string_view text);

using StopwordSet = std::unordered_set<std::string>;

TokenList remove_stopwords(std::span<const std::string> tokens, const StopwordSet& stopwords);

// Reads one token per line; blank lines and '#' comments are skipped.
StopwordSet load_stopwords(const std::string& path);

// Names in catalog order. The catalog index is the pretraining class label.
class DrugLexicon {
 public:
  DrugLexicon() = default;
  explicit DrugLexicon(std::vector<std::string> names);
  static DrugLexicon load(const std::string& path);

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(std::size_t index) const { return names_.at(index); }
  // Case-insensitive lookup.
  std::optional<std::size_t> find(std::string_view token) const;

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct DrugContextExample {
  TokenizedTweet tweet;
  std::size_t drug_label = 0;
};

enum class MaskStatus { kKept, kNoDrug, kMultipleDrugs };

struct MaskResult {
  MaskStatus status = MaskStatus::kNoDrug;
  std::optional<DrugContextExample> example;
};

// Requires exactly one lexicon mention. With mask=false the drug token is
// left in place but the label is still assigned.
MaskResult mask_drug(const TokenizedTweet& tweet, const DrugLexicon& lexicon, bool mask = true);

class Vocabulary {
 public:
  // Sentinels only.
  Vocabulary();
  // tokens must start with the sentinels in canonical order.
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  // Unknown tokens map to <UNK>.
  int index(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(std::size_t index) const { return tokens_.at(index); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::vector<int> indices(std::span<const std::string> tokens) const;

  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  void add(std::string token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// Keeps the `cap` most frequent non-sentinel tokens across all streams. Ties
// go to the lexicographically smaller token.
Vocabulary build_vocabulary(std::span<const TokenList> corpora, std::size_t cap);

inline constexpr std::size_t kDefaultVocabularyCap = 15000;
inline constexpr std::size_t kDefaultEmbeddingDim = 400;
inline constexpr double kEmbeddingInitRange = 0.05;

struct EmbeddingTable {
  Matrix table;          // vocab size x dim
  double coverage = 0.0; // fraction of non-sentinel vocabulary rows found in the file

  std::size_t dim() const { return table.cols(); }
  std::span<const double> row(int index) const { return table.row(static_cast<std::size_t>(index)); }
};

// Plain-text format: header "V D", then V lines "token v1 ... vD".
EmbeddingTable load_embeddings(const std::string& path, const Vocabulary& vocab,
                               std::uint64_t seed);

// Every row except PAD uniform in [-0.05, 0.05].
EmbeddingTable random_embeddings(const Vocabulary& vocab, std::size_t dim, std::uint64_t seed);

// Stable across platforms; used for held-out splits.
std::uint64_t fnv1a(std::string_view text);

}  // namespace adr
