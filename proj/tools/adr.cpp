// SPDX-License-Identifier: Apache-2.0
//
// adr: preprocess tweets, pretrain on masked drug names, train and evaluate
// the ADR tagger.
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "adr/error.hpp"
#include "adr/gradcheck.hpp"
#include "adr/pipeline.hpp"

namespace {

using adr::ExitCode;
using adr::RunConfig;
using nlohmann::json;

std::string option_name(std::string key) {
  for (char& c : key) {
    if (c == '_') c = '-';
  }
  return "--" + key;
}

std::string json_scalar(const json& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_boolean()) return value.get<bool>() ? "true" : "false";
  return value.dump();
}

// Applies a JSON config file. Sections only group keys; every leaf key names
// a command-line flag. Flags given on the command line win.
void apply_config_file(const std::string& path, CLI::App& app, CLI::App* sub) {
  std::ifstream in(path);
  if (!in) throw adr::UsageError("cannot open config file: " + path);
  json root;
  try {
    root = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw adr::UsageError("config file " + path + ": " + e.what());
  }
  std::function<void(const json&, const std::string&)> walk = [&](const json& node,
                                                                   const std::string& where) {
    for (const auto& [key, value] : node.items()) {
      const std::string dotted = where.empty() ? key : where + "." + key;
      if (value.is_object()) {
        walk(value, dotted);
        continue;
      }
      const std::string name = option_name(key);
      CLI::Option* opt = sub ? sub->get_option_no_throw(name) : nullptr;
      if (!opt) opt = app.get_option_no_throw(name);
      if (!opt) {
        // Keys for other subcommands are allowed in a shared config file.
        bool known = false;
        for (CLI::App* other : app.get_subcommands({})) {
          if (other->get_option_no_throw(name)) known = true;
        }
        if (known) continue;
        throw adr::UsageError("config file " + path + ": unknown key \"" + dotted + "\"");
      }
      if (opt->count() > 0) continue;
      opt->add_result(json_scalar(value));
      opt->run_callback();
    }
  };
  walk(root, "");
}

void add_shared_options(CLI::App& app, RunConfig& cfg) {
  app.add_option("--unlabeled", cfg.unlabeled, "Unlabeled corpus (tweet_id TAB text)");
  app.add_option("--examples", cfg.examples, "Preprocessed drug-context examples");
  app.add_option("--train", cfg.train, "Labeled training TSV");
  app.add_option("--test", cfg.test, "Labeled test TSV");
  app.add_option("--embeddings", cfg.embeddings, "Pretrained embeddings (\"V D\" text format)");
  app.add_option("--lexicon", cfg.lexicon, "Drug lexicon, one name per line");
  app.add_option("--stopwords", cfg.stopwords, "Stopword list, one token per line");
  app.add_option("--vocab", cfg.vocab, "Vocabulary file");
  app.add_option("--init-checkpoint", cfg.init_checkpoint, "Pretrained checkpoint to fine-tune");
  app.add_option("--checkpoint-dir", cfg.checkpoint_dir, "Directory for checkpoints")
      ->envname("ADR_CHECKPOINT_DIR");
  app.add_option("--checkpoint", cfg.checkpoint, "Checkpoint path (overrides --checkpoint-dir)");
  app.add_option("--log", cfg.log, "Append training records (JSON lines) here");
  app.add_option("--report", cfg.report, "Write the evaluation report here");

  app.add_option("--embedding-dim", cfg.embedding_dim, "Word vector size (default 400)");
  app.add_option("--hidden-dim", cfg.hidden_dim, "LSTM hidden size (default 500)");
  app.add_option("--pretrain-epochs", cfg.pretrain_epochs)->capture_default_str();
  app.add_option("--pretrain-batch-size", cfg.pretrain_batch_size)->capture_default_str();
  app.add_option("--epochs", cfg.epochs, "Supervised epochs")->capture_default_str();
  app.add_option("--batch-size", cfg.batch_size, "Supervised batch size")->capture_default_str();
  app.add_option("--max-seq-len", cfg.max_seq_len)->capture_default_str();
  app.add_option("--learning-rate", cfg.learning_rate)->capture_default_str();
  app.add_option("--vocab-cap", cfg.vocab_cap)->capture_default_str();
  app.add_option("--trials", cfg.trials, "Supervised trials for evaluate --retrain")
      ->capture_default_str();
  app.add_option("--parallel-trials", cfg.parallel_trials)->capture_default_str();
  app.add_option("--seed", cfg.seed)->capture_default_str();

  app.add_flag("--drug-mask,!--no-drug-mask", cfg.mask_drugs, "Mask drug names (default on)");
  app.add_flag_callback(
      "--vocab-labeled-only",
      [&cfg] { cfg.vocab_source = adr::VocabSource::kLabeledOnly; },
      "Build the vocabulary from labeled training data only");
  app.add_option_function<std::string>(
         "--pooling",
         [&cfg](const std::string& v) {
           cfg.pooling = v == "sum" ? adr::PoolingMode::kSum : adr::PoolingMode::kMean;
         },
         "Pooling for the drug head: mean or sum")
      ->check(CLI::IsMember({"mean", "sum"}));
  app.add_flag("--gate-biases,!--no-gate-biases", cfg.gate_biases, "LSTM gate biases");
  app.add_flag("--train-embeddings", cfg.train_embeddings, "Fine-tune word vectors");
  app.add_flag("--score-indication", cfg.score_indication, "Also score Indication spans");
}

int run(int argc, char** argv) {
  RunConfig cfg;
  CLI::App app{"Semi-supervised BiLSTM tagger for adverse drug reaction mentions", "adr"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  app.add_option("--config", config_path, "JSON config; leaf keys are flag names");
  add_shared_options(app, cfg);

  auto* preprocess = app.add_subcommand("preprocess", "Normalize and mask the unlabeled corpus into --examples");
  auto* build_vocab = app.add_subcommand("build-vocab", "Build the vocabulary and write it to --vocab");
  auto* pretrain = app.add_subcommand("pretrain", "Phase 1: predict the masked drug name");
  auto* train = app.add_subcommand("train", "Phase 2: supervised IO tagging");
  auto* evaluate = app.add_subcommand("evaluate", "Approximate-match P/R/F1 on --test");
  auto* predict = app.add_subcommand("predict", "Tag raw text with a trained checkpoint");
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of all gradients");

  evaluate->add_flag("--retrain", cfg.retrain,
                     "Train --trials fresh supervised models (seeds seed..seed+trials-1) and aggregate");

  std::string text;
  predict->add_option("--text", text, "Raw tweet text (default: one tweet per stdin line)");

  adr::GradcheckOptions gc;
  gradcheck->add_option("--length", gc.length)->capture_default_str();
  gradcheck->add_option("--drugs", gc.drugs)->capture_default_str();
  gradcheck->add_option("--seeds", gc.seeds)->capture_default_str();
  gradcheck->add_option("--epsilon", gc.epsilon)->capture_default_str();
  gradcheck->add_option("--tolerance", gc.tolerance)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::kUsage);
  }

  CLI::App* active = app.get_subcommands().front();
  if (!config_path.empty()) apply_config_file(config_path, app, active);

  if (active == preprocess) {
    if (cfg.unlabeled.empty() || cfg.lexicon.empty() || cfg.examples.empty()) {
      throw adr::UsageError("preprocess needs --unlabeled, --lexicon and --examples");
    }
    auto lexicon = adr::DrugLexicon::load(cfg.lexicon);
    std::optional<adr::StopwordSet> sw;
    if (!cfg.stopwords.empty()) sw = adr::load_stopwords(cfg.stopwords);
    auto report = adr::preprocess_corpus(cfg.unlabeled, lexicon, sw ? &*sw : nullptr,
                                         cfg.mask_drugs, cfg.examples);
    std::cout << report.to_text();
  } else if (active == build_vocab) {
    if (cfg.vocab.empty()) throw adr::UsageError("build-vocab needs --vocab (output path)");
    adr::RunConfig building = cfg;
    building.vocab.clear();
    auto vocab = adr::build_run_vocabulary(building);
    vocab.save(cfg.vocab);
    std::cout << "vocabulary: " << vocab.size() << " entries (" << adr::kSentinelCount
              << " sentinels)\n";
  } else if (active == pretrain) {
    adr::run_pretrain(cfg, std::cout);
  } else if (active == train) {
    adr::run_train(cfg, std::cout);
  } else if (active == evaluate) {
    adr::run_evaluate(cfg, std::cout);
  } else if (active == predict) {
    const std::string path = cfg.output_checkpoint("train");
    adr::Model model = adr::load_checkpoint(path);
    std::optional<adr::StopwordSet> sw;
    if (!cfg.stopwords.empty()) sw = adr::load_stopwords(cfg.stopwords);
    auto handle = [&](const std::string& raw) {
      auto p = adr::predict_text(model, raw, sw ? &*sw : nullptr);
      if (p.tokens.empty()) {
        std::cerr << "warning: input is empty after preprocessing\n";
        return;
      }
      std::cout << adr::format_prediction(p) << '\n';
    };
    if (predict->count("--text") > 0) {
      handle(text);
    } else {
      std::string line;
      while (std::getline(std::cin, line)) handle(line);
    }
  } else if (active == gradcheck) {
    gc.embedding_dim = cfg.embedding_dim.value_or(gc.embedding_dim);
    gc.hidden_dim = cfg.hidden_dim.value_or(gc.hidden_dim);
    gc.gate_biases = cfg.gate_biases;
    gc.pooling = cfg.pooling;
    const auto result = adr::run_gradcheck(gc);
    std::cout << result.summary();
    if (!result.passed) return static_cast<int>(ExitCode::kNumerical);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const adr::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kUsage);
  }
}
