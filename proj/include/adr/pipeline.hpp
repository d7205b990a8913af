// SPDX-License-Identifier: Apache-2.0
//
// The stages behind each `adr` subcommand, callable from tests.
#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "adr/encoding.hpp"
#include "adr/eval.hpp"
#include "adr/model.hpp"
#include "adr/text.hpp"
#include "adr/training.hpp"

namespace adr {

enum class VocabSource { kBoth, kLabeledOnly };

struct RunConfig {
  // Inputs.
  std::string unlabeled;   // tweet_id TAB raw_text
  std::string examples;    // preprocess output
  std::string train;       // labeled TSV
  std::string test;        // labeled TSV
  std::string embeddings;  // "V D" text format; empty = random init
  std::string lexicon;
  std::string stopwords;   // empty = no stopword removal
  std::string vocab;       // empty = build on the fly
  std::string init_checkpoint;
  // Outputs.
  std::string checkpoint_dir = ".";
  std::string checkpoint;  // empty = <checkpoint_dir>/<phase>.ckpt
  std::string log;         // JSON lines; empty = no log file
  std::string report;      // empty = stdout only

  // Unset means "take it from the checkpoint" when one is loaded.
  std::optional<std::size_t> embedding_dim;
  std::optional<std::size_t> hidden_dim;

  std::size_t pretrain_epochs = 30;
  std::size_t pretrain_batch_size = 128;
  std::size_t epochs = 5;
  std::size_t batch_size = 1;
  std::size_t max_seq_len = kDefaultMaxSequenceLength;
  double learning_rate = 0.001;
  std::size_t vocab_cap = kDefaultVocabularyCap;

  std::size_t trials = 10;
  bool retrain = false;  // evaluate: run `trials` supervised trainings instead of scoring a checkpoint
  std::size_t parallel_trials = 1;
  std::uint64_t seed = 1;

  bool mask_drugs = true;
  VocabSource vocab_source = VocabSource::kBoth;
  PoolingMode pooling = PoolingMode::kMean;
  bool gate_biases = true;
  bool train_embeddings = false;
  bool score_indication = false;

  std::size_t resolved_embedding_dim() const { return embedding_dim.value_or(kDefaultEmbeddingDim); }
  std::size_t resolved_hidden_dim() const { return hidden_dim.value_or(kDefaultHiddenDim); }
  std::string output_checkpoint(std::string_view phase) const;
  TrainConfig pretrain_config() const;
  TrainConfig supervised_config(std::uint64_t trial_seed) const;
};

struct PreprocessReport {
  std::size_t read = 0;
  std::size_t kept = 0;
  std::size_t rejected_no_drug = 0;
  std::size_t rejected_multi_drug = 0;
  std::size_t empty = 0;

  std::string to_text() const;
};

// Normalize + tokenize + stopword removal.
TokenList preprocess_text(std::string_view raw, const StopwordSet* stopwords);

// Reads the unlabeled corpus, masks drugs and writes
// "tweet_id TAB drug TAB tokens" lines. Throws DataError when nothing is kept.
PreprocessReport preprocess_corpus(const std::string& corpus_path, const DrugLexicon& lexicon,
                                   const StopwordSet* stopwords, bool mask_drugs,
                                   const std::string& out_path);

std::vector<DrugContextExample> read_drug_examples(const std::string& path,
                                                   const DrugLexicon& lexicon);
void write_drug_examples(const std::string& path, std::span<const DrugContextExample> examples,
                         const DrugLexicon& lexicon);

// Per-token normalization of labeled data; tokens that vanish or are
// stopwords are dropped together with their tags.
LabeledTweet preprocess_labeled(const LabeledTweet& tweet, const StopwordSet* stopwords);
std::vector<LabeledTweet> load_labeled(const std::string& path, const StopwordSet* stopwords);

Vocabulary build_run_vocabulary(const RunConfig& config);

std::vector<PretrainExample> to_pretrain_examples(std::span<const DrugContextExample> examples,
                                                  const Vocabulary& vocab);
std::vector<TaggedExample> to_tagged_examples(std::span<const LabeledTweet> tweets,
                                              const Vocabulary& vocab);

// Micro-averaged approximate-match scores of `model` on `tweets`.
Scores evaluate_model(const Model& model, std::span<const LabeledTweet> tweets,
                      bool include_indication = false);

struct StageResult {
  std::string checkpoint_path;
  TrainingLog log;
};

// Each stage writes its checkpoint/log/report as configured and prints a
// short human-readable summary to `out`.
StageResult run_pretrain(const RunConfig& config, std::ostream& out);
StageResult run_train(const RunConfig& config, std::ostream& out);
EvalReport run_evaluate(const RunConfig& config, std::ostream& out);

struct Prediction {
  TokenList tokens;
  TagSequence tags;
  std::vector<Span> spans;
};

Prediction predict_text(const Model& model, std::string_view raw, const StopwordSet* stopwords);
std::string format_prediction(const Prediction& prediction);

}  // namespace adr
