// SPDX-License-Identifier: Apache-2.0
#include "adr/pipeline.hpp"

#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "adr/error.hpp"

namespace adr {

std::string RunConfig::output_checkpoint(std::string_view phase) const {
  if (!checkpoint.empty()) return checkpoint;
  return (std::filesystem::path(checkpoint_dir) / (std::string(phase) + ".ckpt")).string();
}

TrainConfig RunConfig::pretrain_config() const {
  TrainConfig c = TrainConfig::pretrain_defaults();
  c.batch_size = pretrain_batch_size;
  c.epochs = pretrain_epochs;
  c.max_seq_len = max_seq_len;
  c.seed = seed;
  c.adam.learning_rate = learning_rate;
  return c;
}

TrainConfig RunConfig::supervised_config(std::uint64_t trial_seed) const {
  TrainConfig c = TrainConfig::supervised_defaults();
  c.batch_size = batch_size;
  c.epochs = epochs;
  c.max_seq_len = max_seq_len;
  c.seed = trial_seed;
  c.adam.learning_rate = learning_rate;
  return c;
}

std::string PreprocessReport::to_text() const {
  std::ostringstream out;
  out << "read=" << read << " kept=" << kept << " rejected_no_drug=" << rejected_no_drug
      << " rejected_multi_drug=" << rejected_multi_drug << " empty=" << empty << '\n';
  return out.str();
}

TokenList preprocess_text(std::string_view raw, const StopwordSet* stopwords) {
  TokenList tokens = tokenize(normalize(raw));
  if (stopwords) tokens = remove_stopwords(tokens, *stopwords);
  return tokens;
}

PreprocessReport preprocess_corpus(const std::string& corpus_path, const DrugLexicon& lexicon,
                                   const StopwordSet* stopwords, bool mask_drugs,
                                   const std::string& out_path) {
  std::ifstream in(corpus_path);
  if (!in) throw UsageError("cannot open unlabeled corpus: " + corpus_path);
  PreprocessReport report;
  std::vector<DrugContextExample> kept;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw DataError(corpus_path + ":" + std::to_string(line_no) +
                      ": expected \"tweet_id<TAB>text\"");
    }
    ++report.read;
    TokenizedTweet tweet{preprocess_text(std::string_view(line).substr(tab + 1), stopwords),
                         line.substr(0, tab)};
    if (tweet.tokens.empty()) {
      ++report.empty;
      continue;
    }
    MaskResult r = mask_drug(tweet, lexicon, mask_drugs);
    switch (r.status) {
      case MaskStatus::kKept:
        ++report.kept;
        kept.push_back(std::move(*r.example));
        break;
      case MaskStatus::kNoDrug: ++report.rejected_no_drug; break;
      case MaskStatus::kMultipleDrugs: ++report.rejected_multi_drug; break;
    }
  }
  if (report.read == 0) throw DataError("unlabeled corpus is empty: " + corpus_path);
  if (report.kept == 0) throw DataError("no tweet with exactly one drug mention in " + corpus_path);
  write_drug_examples(out_path, kept, lexicon);
  return report;
}

void write_drug_examples(const std::string& path, std::span<const DrugContextExample> examples,
                         const DrugLexicon& lexicon) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw UsageError("cannot write examples file: " + path);
  for (const auto& ex : examples) {
    out << ex.tweet.source_id << '\t' << lexicon.name(ex.drug_label) << '\t';
    for (std::size_t i = 0; i < ex.tweet.tokens.size(); ++i) {
      if (i) out << ' ';
      out << ex.tweet.tokens[i];
    }
    out << '\n';
  }
}

std::vector<DrugContextExample> read_drug_examples(const std::string& path,
                                                   const DrugLexicon& lexicon) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open examples file: " + path);
  std::vector<DrugContextExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) {
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": expected \"tweet_id<TAB>drug<TAB>tokens\"");
    }
    auto label = lexicon.find(line.substr(t1 + 1, t2 - t1 - 1));
    if (!label) {
      throw DataError(path + ":" + std::to_string(line_no) + ": drug \"" +
                      line.substr(t1 + 1, t2 - t1 - 1) + "\" is not in the lexicon");
    }
    DrugContextExample ex{{tokenize(std::string_view(line).substr(t2 + 1)), line.substr(0, t1)},
                          *label};
    if (ex.tweet.tokens.empty()) {
      throw DataError(path + ":" + std::to_string(line_no) + ": example has no tokens");
    }
    out.push_back(std::move(ex));
  }
  return out;
}

LabeledTweet preprocess_labeled(const LabeledTweet& tweet, const StopwordSet* stopwords) {
  LabeledTweet out;
  out.id = tweet.id;
  for (std::size_t i = 0; i < tweet.tokens.size(); ++i) {
    std::string token = normalize_token(tweet.tokens[i]);
    if (token.empty()) continue;
    if (stopwords && !is_sentinel(token) && stopwords->contains(token)) continue;
    out.tokens.push_back(std::move(token));
    out.tags.push_back(tweet.tags[i]);
  }
  return out;
}

std::vector<LabeledTweet> load_labeled(const std::string& path, const StopwordSet* stopwords) {
  std::vector<LabeledTweet> out;
  for (const LabeledTweet& raw : read_labeled_tsv(path)) {
    LabeledTweet t = preprocess_labeled(raw, stopwords);
    if (!t.tokens.empty()) out.push_back(std::move(t));
  }
  return out;
}

namespace {

std::optional<StopwordSet> maybe_stopwords(const RunConfig& config) {
  if (config.stopwords.empty()) return std::nullopt;
  return load_stopwords(config.stopwords);
}

const StopwordSet* ptr(const std::optional<StopwordSet>& s) { return s ? &*s : nullptr; }

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw UsageError(std::string("missing required path: ") + what);
  if (!std::filesystem::exists(path)) {
    throw UsageError(std::string(what) + " file does not exist: " + path);
  }
}

Vocabulary run_vocabulary(const RunConfig& config) {
  if (!config.vocab.empty()) return Vocabulary::load(config.vocab);
  return build_run_vocabulary(config);
}

EmbeddingTable run_embeddings(const RunConfig& config, const Vocabulary& vocab,
                              std::uint64_t seed) {
  if (config.embeddings.empty()) {
    return random_embeddings(vocab, config.resolved_embedding_dim(), seed);
  }
  require_file(config.embeddings, "embeddings");
  EmbeddingTable emb = load_embeddings(config.embeddings, vocab, seed);
  if (config.embedding_dim && *config.embedding_dim != emb.dim()) {
    throw DimensionError("embedding file " + config.embeddings + " has dimension " +
                         std::to_string(emb.dim()) + " but embedding_dim is " +
                         std::to_string(*config.embedding_dim));
  }
  return emb;
}

ModelConfig model_config(const RunConfig& config, std::size_t embedding_dim,
                         std::size_t drug_count) {
  ModelConfig mc;
  mc.embedding_dim = embedding_dim;
  mc.hidden_dim = config.resolved_hidden_dim();
  mc.drug_count = drug_count;
  mc.pooling = config.pooling;
  mc.gate_biases = config.gate_biases;
  mc.train_embeddings = config.train_embeddings;
  return mc;
}

std::vector<std::string> drug_catalog(const RunConfig& config) {
  if (!config.lexicon.empty()) {
    require_file(config.lexicon, "drug lexicon");
    std::vector<std::string> names = DrugLexicon::load(config.lexicon).names();
    if (names.size() >= 2) return names;
  }
  // The drug head is unused without pretraining; keep it minimal.
  return {"<drug-0>", "<drug-1>"};
}

// Starting point of supervised training: the pretrained checkpoint when
// configured, otherwise a freshly initialized model.
Model initial_model(const RunConfig& config, std::uint64_t seed) {
  if (!config.init_checkpoint.empty()) {
    require_file(config.init_checkpoint, "initial checkpoint");
    Model model = load_checkpoint(config.init_checkpoint);
    const ModelConfig& mc = model.config();
    if ((config.hidden_dim && *config.hidden_dim != mc.hidden_dim) ||
        (config.embedding_dim && *config.embedding_dim != mc.embedding_dim)) {
      throw DimensionError("checkpoint " + config.init_checkpoint + " has E=" +
                           std::to_string(mc.embedding_dim) + " H=" +
                           std::to_string(mc.hidden_dim) + " but the configuration expects" +
                           (config.embedding_dim ? " E=" + std::to_string(*config.embedding_dim) : "") +
                           (config.hidden_dim ? " H=" + std::to_string(*config.hidden_dim) : ""));
    }
    model.set_seed(seed);
    return model;
  }
  Vocabulary vocab = run_vocabulary(config);
  EmbeddingTable emb = run_embeddings(config, vocab, seed);
  auto drugs = drug_catalog(config);
  const ModelConfig mc = model_config(config, emb.dim(), drugs.size());
  return Model(mc, std::move(vocab), std::move(emb), std::move(drugs), seed);
}

void write_log(const RunConfig& config, const TrainingLog& log,
               const std::optional<nlohmann::ordered_json>& preface = std::nullopt) {
  if (config.log.empty()) return;
  if (preface) {
    std::ofstream out(config.log, std::ios::app);
    if (!out) throw UsageError("cannot write training log: " + config.log);
    out << preface->dump() << '\n';
  }
  log.append_to(config.log);
}

}  // namespace

Vocabulary build_run_vocabulary(const RunConfig& config) {
  auto stopwords = maybe_stopwords(config);
  std::vector<TokenList> streams;
  if (!config.train.empty()) {
    require_file(config.train, "labeled training");
    TokenList stream;
    for (const LabeledTweet& t : load_labeled(config.train, ptr(stopwords))) {
      stream.insert(stream.end(), t.tokens.begin(), t.tokens.end());
    }
    streams.push_back(std::move(stream));
  } else if (config.vocab_source == VocabSource::kLabeledOnly) {
    throw UsageError("a labeled-only vocabulary needs the labeled training file");
  }
  if (config.vocab_source == VocabSource::kBoth && !config.examples.empty()) {
    require_file(config.examples, "preprocessed examples");
    require_file(config.lexicon, "drug lexicon");
    TokenList stream;
    for (const auto& ex : read_drug_examples(config.examples, DrugLexicon::load(config.lexicon))) {
      stream.insert(stream.end(), ex.tweet.tokens.begin(), ex.tweet.tokens.end());
    }
    streams.push_back(std::move(stream));
  }
  return build_vocabulary(streams, config.vocab_cap);
}

std::vector<PretrainExample> to_pretrain_examples(std::span<const DrugContextExample> examples,
                                                  const Vocabulary& vocab) {
  std::vector<PretrainExample> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    out.push_back({ex.tweet.source_id, vocab.indices(ex.tweet.tokens), ex.drug_label});
  }
  return out;
}

std::vector<TaggedExample> to_tagged_examples(std::span<const LabeledTweet> tweets,
                                              const Vocabulary& vocab) {
  std::vector<TaggedExample> out;
  out.reserve(tweets.size());
  for (const auto& t : tweets) out.push_back({t.id, vocab.indices(t.tokens), t.tags});
  return out;
}

Scores evaluate_model(const Model& model, std::span<const LabeledTweet> tweets,
                      bool include_indication) {
  MatchCounts total;
  for (const LabeledTweet& t : tweets) {
    if (t.tokens.empty()) continue;
    const TagSequence predicted = model.predict_tags(model.vocab().indices(t.tokens));
    total += approximate_match(decode_spans(predicted), decode_spans(t.tags), include_indication);
  }
  return prf(total);
}

StageResult run_pretrain(const RunConfig& config, std::ostream& out) {
  require_file(config.examples, "preprocessed examples");
  require_file(config.lexicon, "drug lexicon");
  const DrugLexicon lexicon = DrugLexicon::load(config.lexicon);
  if (lexicon.size() < 2) throw UsageError("pretraining needs a lexicon with at least 2 drugs");
  const auto examples = read_drug_examples(config.examples, lexicon);

  Vocabulary vocab = run_vocabulary(config);
  EmbeddingTable emb = run_embeddings(config, vocab, config.seed);
  const double coverage = emb.coverage;
  Model model(model_config(config, emb.dim(), lexicon.size()), vocab, std::move(emb),
              lexicon.names(), config.seed);

  StageResult result;
  result.log = pretrain(to_pretrain_examples(examples, vocab), model, config.pretrain_config());
  result.checkpoint_path = config.output_checkpoint("pretrain");
  save_checkpoint(model, result.checkpoint_path);
  write_log(config, result.log);

  const EpochRecord& last = result.log.records.back();
  out << "pretrain: " << result.log.train_examples << " training / "
      << result.log.heldout_examples << " held-out examples, vocabulary " << vocab.size()
      << ", embedding coverage " << coverage << '\n';
  out << "pretrain: epoch " << last.epoch << " mean_loss " << last.mean_loss;
  if (last.accuracy) out << " heldout_accuracy " << *last.accuracy;
  out << "\ncheckpoint: " << result.checkpoint_path << '\n';
  return result;
}

StageResult run_train(const RunConfig& config, std::ostream& out) {
  require_file(config.train, "labeled training");
  auto stopwords = maybe_stopwords(config);
  const auto train = load_labeled(config.train, ptr(stopwords));
  if (train.empty()) throw DataError("no labeled training tweets in " + config.train);
  std::optional<std::size_t> test_count;
  if (!config.test.empty()) {
    require_file(config.test, "labeled test");
    test_count = read_labeled_tsv(config.test).size();
  }

  Model model = initial_model(config, config.seed);
  StageResult result;
  result.log = train_supervised(to_tagged_examples(train, model.vocab()), model,
                                config.supervised_config(config.seed));
  result.checkpoint_path = config.output_checkpoint("train");
  save_checkpoint(model, result.checkpoint_path);

  nlohmann::ordered_json data;
  data["phase"] = "supervised";
  data["train_tweets"] = train.size();
  if (test_count) data["test_tweets"] = *test_count;
  data["init"] = config.init_checkpoint.empty() ? "fresh" : "pretrained";
  write_log(config, result.log, data);

  out << "data: " << train.size() << " training tweets";
  if (test_count) out << ", " << *test_count << " test tweets";
  out << '\n';
  const EpochRecord& last = result.log.records.empty() ? EpochRecord{} : result.log.records.back();
  out << "train: " << (config.init_checkpoint.empty() ? "fresh" : "pretrained")
      << " init, epoch " << last.epoch << " mean_loss " << last.mean_loss << '\n';
  out << "checkpoint: " << result.checkpoint_path << '\n';
  return result;
}

EvalReport run_evaluate(const RunConfig& config, std::ostream& out) {
  require_file(config.test, "labeled test");
  auto stopwords = maybe_stopwords(config);
  const auto test = load_labeled(config.test, ptr(stopwords));
  if (test.empty()) throw DataError("no labeled test tweets in " + config.test);

  std::vector<Scores> scores;
  std::vector<std::uint64_t> seeds;
  if (!config.retrain) {
    // Score an existing checkpoint once.
    const std::string path = config.output_checkpoint("train");
    require_file(path, "checkpoint");
    Model model = load_checkpoint(path);
    if ((config.hidden_dim && *config.hidden_dim != model.config().hidden_dim) ||
        (config.embedding_dim && *config.embedding_dim != model.config().embedding_dim)) {
      throw DimensionError("checkpoint " + path +
                           " does not match the configured model dimensions");
    }
    scores.push_back(evaluate_model(model, test, config.score_indication));
    seeds.push_back(model.seed());
  } else {
    if (config.trials < 1) throw UsageError("trials must be >= 1");
    require_file(config.train, "labeled training");
    const auto train = load_labeled(config.train, ptr(stopwords));
    if (train.empty()) throw DataError("no labeled training tweets in " + config.train);

    const std::size_t n = config.trials;
    scores.resize(n);
    for (std::size_t i = 0; i < n; ++i) seeds.push_back(config.seed + i);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          Model model = initial_model(config, seeds[i]);
          train_supervised(to_tagged_examples(train, model.vocab()), model,
                           config.supervised_config(seeds[i]));
          scores[i] = evaluate_model(model, test, config.score_indication);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    };
    const std::size_t workers = std::clamp<std::size_t>(config.parallel_trials, 1, n);
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  EvalReport report = aggregate_trials(scores, seeds);
  const std::string text = report.to_text();
  out << text;
  if (!config.report.empty()) {
    std::ofstream file(config.report, std::ios::trunc);
    if (!file) throw UsageError("cannot write report: " + config.report);
    file << text;
  }
  return report;
}

Prediction predict_text(const Model& model, std::string_view raw, const StopwordSet* stopwords) {
  Prediction p;
  p.tokens = preprocess_text(raw, stopwords);
  if (p.tokens.empty()) return p;
  p.tags = model.predict_tags(model.vocab().indices(p.tokens));
  p.spans = decode_spans(p.tags);
  return p;
}

std::string format_prediction(const Prediction& prediction) {
  std::string out;
  for (std::size_t i = 0; i < prediction.tokens.size(); ++i) {
    out += prediction.tokens[i] + '\t' + std::string(tag_name(prediction.tags[i])) + '\n';
  }
  for (const Span& s : prediction.spans) {
    if (s.label != EntityLabel::kAdr) continue;
    out += "ADR\t" + std::to_string(s.start) + '\t' + std::to_string(s.end) + '\t';
    for (std::size_t i = s.start; i < s.end; ++i) {
      if (i > s.start) out += ' ';
      out += prediction.tokens[i];
    }
    out += '\n';
  }
  return out;
}

}  // namespace adr
