// SPDX-License-Identifier: Apache-2.0
#include "adr/text.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "adr/error.hpp"

namespace adr {
namespace {

bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_word_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 0x80 && (std::isalnum(u) || c == '_');
}

char ascii_lower(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = ascii_lower(c);
  return out;
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (ascii_lower(s[i]) != prefix[i]) return false;
  }
  return true;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_ascii_space(s[b])) ++b;
  while (e > b && is_ascii_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> read_list_file(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw UsageError(std::string("cannot open ") + what + " file: " + path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    std::string entry = trim(line);
    if (entry.empty() || entry[0] == '#') continue;
    out.push_back(std::move(entry));
  }
  return out;
}

}  // namespace

bool is_sentinel(std::string_view token) {
  return std::find(std::begin(kSentinels), std::end(kSentinels), token) != std::end(kSentinels);
}

std::string normalize_token(std::string_view raw) {
  if (is_sentinel(raw)) return std::string(raw);
  if (starts_with_ci(raw, "http://") || starts_with_ci(raw, "https://") ||
      starts_with_ci(raw, "www.")) {
    return std::string(kLinkToken);
  }
  if (raw.size() >= 2 && raw[0] == '@' && is_word_char(raw[1])) {
    return std::string(kUserToken);
  }
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    const auto u = static_cast<unsigned char>(c);
    if (u >= 0x80 || std::ispunct(u) || std::iscntrl(u) || is_ascii_space(c)) continue;
    out.push_back(ascii_lower(c));
  }
  return out;
}

std::string normalize(std::string_view raw) {
  std::string out;
  for (const std::string& token : tokenize(raw)) {
    std::string norm = normalize_token(token);
    if (norm.empty()) continue;
    if (!out.empty()) out.push_back(' ');
    out += norm;
  }
  return out;
}

TokenList tokenize(std::string_view text) {
  TokenList tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_ascii_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_ascii_space(text[i])) ++i;
    if (i > start) tokens.emplace_back(text.substr(start, i - start));
  }
  return tokens;
}

TokenList remove_stopwords(std::span<const std::string> tokens, const StopwordSet& stopwords) {
  TokenList out;
  out.reserve(tokens.size());
  for (const std::string& t : tokens) {
    if (is_sentinel(t) || !stopwords.contains(t)) out.push_back(t);
  }
  return out;
}

StopwordSet load_stopwords(const std::string& path) {
  StopwordSet set;
  for (std::string& w : read_list_file(path, "stopword")) set.insert(lowercase(w));
  return set;
}

DrugLexicon::DrugLexicon(std::vector<std::string> names) {
  for (std::string& raw : names) {
    std::string name = lowercase(trim(raw));
    if (name.empty() || index_.contains(name)) continue;
    index_.emplace(name, names_.size());
    names_.push_back(std::move(name));
  }
}

DrugLexicon DrugLexicon::load(const std::string& path) {
  DrugLexicon lexicon(read_list_file(path, "drug lexicon"));
  if (lexicon.size() == 0) throw DataError("drug lexicon is empty: " + path);
  return lexicon;
}

std::optional<std::size_t> DrugLexicon::find(std::string_view token) const {
  auto it = index_.find(lowercase(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

MaskResult mask_drug(const TokenizedTweet& tweet, const DrugLexicon& lexicon, bool mask) {
  std::optional<std::size_t> position;
  std::size_t label = 0;
  for (std::size_t i = 0; i < tweet.tokens.size(); ++i) {
    auto hit = lexicon.find(tweet.tokens[i]);
    if (!hit) continue;
    if (position) return {MaskStatus::kMultipleDrugs, std::nullopt};
    position = i;
    label = *hit;
  }
  if (!position) return {MaskStatus::kNoDrug, std::nullopt};
  DrugContextExample ex{tweet, label};
  if (mask) ex.tweet.tokens[*position] = std::string(kDrugToken);
  return {MaskStatus::kKept, std::move(ex)};
}

Vocabulary::Vocabulary() {
  for (std::string_view s : kSentinels) add(std::string(s));
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < kSentinelCount ||
      !std::equal(std::begin(kSentinels), std::end(kSentinels), tokens.begin())) {
    throw DataError("vocabulary must begin with the sentinel tokens in canonical order");
  }
  Vocabulary v;
  for (std::size_t i = kSentinelCount; i < tokens.size(); ++i) {
    if (v.contains(tokens[i])) throw DataError("duplicate vocabulary token: " + tokens[i]);
    v.add(std::move(tokens[i]));
  }
  return v;
}

void Vocabulary::add(std::string token) {
  index_.emplace(token, static_cast<int>(tokens_.size()));
  tokens_.push_back(std::move(token));
}

int Vocabulary::index(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnkIndex : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.contains(std::string(token));
}

std::vector<int> Vocabulary::indices(std::span<const std::string> tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const std::string& t : tokens) out.push_back(index(t));
  return out;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write vocabulary file: " + path);
  for (const std::string& t : tokens_) out << t << '\n';
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open vocabulary file: " + path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) tokens.push_back(line);
  }
  return from_tokens(std::move(tokens));
}

Vocabulary build_vocabulary(std::span<const TokenList> corpora, std::size_t cap) {
  if (cap < 1) throw UsageError("vocabulary cap must be >= 1");
  std::map<std::string, std::size_t> counts;
  std::size_t total = 0;
  for (const TokenList& stream : corpora) {
    for (const std::string& t : stream) {
      ++total;
      if (!is_sentinel(t)) ++counts[t];
    }
  }
  if (total == 0) throw UsageError("cannot build a vocabulary from an empty corpus");

  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  // counts is ordered by token, so a stable sort on frequency keeps the
  // lexicographic tie-break.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > cap) ranked.resize(cap);

  std::vector<std::string> tokens(std::begin(kSentinels), std::end(kSentinels));
  for (auto& [token, count] : ranked) tokens.push_back(token);
  return Vocabulary::from_tokens(std::move(tokens));
}

EmbeddingTable random_embeddings(const Vocabulary& vocab, std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw UsageError("embedding dimension must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-kEmbeddingInitRange, kEmbeddingInitRange);
  EmbeddingTable emb{Matrix(vocab.size(), dim), 0.0};
  for (std::size_t r = 0; r < vocab.size(); ++r) {
    for (double& v : emb.table.row(r)) v = dist(rng);
  }
  std::fill(emb.table.row(kPadIndex).begin(), emb.table.row(kPadIndex).end(), 0.0);
  return emb;
}

EmbeddingTable load_embeddings(const std::string& path, const Vocabulary& vocab,
                               std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open embedding file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ":1: missing \"V D\" header");
  std::size_t declared_rows = 0, dim = 0;
  {
    std::istringstream header(line);
    std::string extra;
    if (!(header >> declared_rows >> dim) || (header >> extra) || dim == 0) {
      throw DataError(path + ":1: malformed header, expected \"V D\"");
    }
  }

  EmbeddingTable emb = random_embeddings(vocab, dim, seed);
  std::vector<bool> found(vocab.size(), false);
  std::size_t line_no = 1, rows = 0;
  Vector values(dim);
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    ++rows;
    TokenList fields = tokenize(line);
    if (fields.size() != dim + 1) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(dim) + " values after the token, found " +
                      std::to_string(fields.size() - 1));
    }
    for (std::size_t i = 0; i < dim; ++i) {
      const std::string& f = fields[i + 1];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), values[i]);
      if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(values[i])) {
        throw DataError(path + ":" + std::to_string(line_no) + ": cannot parse value \"" + f +
                        "\"");
      }
    }
    if (!vocab.contains(fields[0])) continue;
    const int idx = vocab.index(fields[0]);
    if (idx == kPadIndex || found[static_cast<std::size_t>(idx)]) continue;
    found[static_cast<std::size_t>(idx)] = true;
    std::copy(values.begin(), values.end(), emb.table.row(static_cast<std::size_t>(idx)).begin());
  }
  if (rows != declared_rows) {
    throw DataError(path + ": header declares " + std::to_string(declared_rows) +
                    " vectors but the file has " + std::to_string(rows));
  }

  std::size_t regular = 0, covered = 0;
  for (std::size_t i = kSentinelCount; i < vocab.size(); ++i) {
    ++regular;
    if (found[i]) ++covered;
  }
  emb.coverage = regular == 0 ? 1.0 : static_cast<double>(covered) / static_cast<double>(regular);
  return emb;
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace adr
