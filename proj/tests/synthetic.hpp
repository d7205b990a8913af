// SPDX-License-Identifier: Apache-2.0
// Synthetic corpora with known structure, used where real tweets would make
// the expected outcome unknowable.
#pragma once

#include <random>
#include <string>
#include <vector>

#include "adr/model.hpp"
#include "adr/text.hpp"
#include "adr/training.hpp"

namespace adr::synthetic {

inline constexpr std::size_t kContexts = 5;
inline constexpr std::size_t kFillers = 30;

// Sentinels, then context words c0..c4, then filler words f0..f29.
inline Vocabulary vocabulary() {
  std::vector<std::string> tokens(std::begin(kSentinels), std::end(kSentinels));
  for (std::size_t i = 0; i < kContexts; ++i) tokens.push_back("c" + std::to_string(i));
  for (std::size_t i = 0; i < kFillers; ++i) tokens.push_back("f" + std::to_string(i));
  return Vocabulary::from_tokens(std::move(tokens));
}

inline int context_id(std::size_t k) { return static_cast<int>(kSentinelCount + k); }
inline int filler_id(std::size_t k) {
  return static_cast<int>(kSentinelCount + kContexts + k);
}

inline std::vector<std::string> drug_names() {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < kContexts; ++i) names.push_back("drug" + std::to_string(i));
  return names;
}

// Unit-scale random vectors; the tiny default init would make these corpora
// needlessly slow to fit.
inline EmbeddingTable embeddings(const Vocabulary& vocab, std::size_t dim, std::uint64_t seed) {
  EmbeddingTable e{Matrix(vocab.size(), dim), 1.0};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (std::size_t r = 1; r < vocab.size(); ++r)
    for (std::size_t c = 0; c < dim; ++c) e.table(r, c) = d(rng);
  return e;
}

inline std::vector<int> filler(std::mt19937_64& rng, std::size_t n) {
  std::vector<int> ids(n);
  for (int& id : ids) id = filler_id(rng() % kFillers);
  return ids;
}

// Filler tweets holding one <DRUG> and one context word c_k; the label is k.
inline std::vector<PretrainExample> pretrain_corpus(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  std::vector<PretrainExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = i % kContexts;
    std::vector<int> ids = filler(rng, 3 + rng() % 6);
    ids.insert(ids.begin() + static_cast<std::ptrdiff_t>(rng() % (ids.size() + 1)), kDrugIndex);
    ids.insert(ids.begin() + static_cast<std::ptrdiff_t>(rng() % (ids.size() + 1)),
               context_id(k));
    out.push_back({"u" + std::to_string(seed) + "-" + std::to_string(i), std::move(ids), k});
  }
  return out;
}

// Filler tweets holding one context word c_k. The ADR span starts at c_k and
// covers (k % 2) + 1 tokens, so the word that predicts the drug is part of the
// mention, as reaction words are in real tweets.
inline std::vector<TaggedExample> labeled_set(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  std::vector<TaggedExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = rng() % kContexts;
    const std::size_t span = k % 2 + 1;
    const std::size_t before = rng() % 4, after = rng() % 3;
    const std::size_t length = before + span + after;
    std::vector<int> ids = filler(rng, length);
    TagSequence tags(length, TagLabel::kO);
    ids[before] = context_id(k);
    for (std::size_t t = 0; t < span; ++t) tags[before + t] = TagLabel::kIAdr;
    out.push_back({"l" + std::to_string(seed) + "-" + std::to_string(i), std::move(ids),
                   std::move(tags)});
  }
  return out;
}

// Word vectors are fixed across seeds, like a shared pretrained table; the seed
// only drives the network initialization.
inline Model model(std::size_t dim, std::uint64_t seed) {
  const Vocabulary vocab = vocabulary();
  ModelConfig c;
  c.embedding_dim = dim;
  c.hidden_dim = dim;
  c.drug_count = kContexts;
  return Model(c, vocab, embeddings(vocab, dim, 1000), drug_names(), seed);
}

}  // namespace adr::synthetic
