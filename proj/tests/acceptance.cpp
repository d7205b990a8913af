// SPDX-License-Identifier: Apache-2.0
//
// Acceptance gate: one PASS/FAIL line per criterion; exit status 1 if any fail.
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "adr/encoding.hpp"
#include "adr/eval.hpp"
#include "adr/gradcheck.hpp"
#include "adr/pipeline.hpp"
#include "adr/training.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

namespace fs = std::filesystem;
using namespace adr;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string fmt(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

// 1. Every analytic gradient of both heads agrees with central differences.
Outcome gradient_fidelity() {
  const auto start = Clock::now();
  GradcheckOptions o;
  o.embedding_dim = 5;
  o.hidden_dim = 7;
  o.length = 4;
  o.drugs = 3;
  o.seeds = 10;
  o.epsilon = 1e-5;
  o.tolerance = 1e-4;
  const GradcheckResult r = run_gradcheck(o);
  const double secs = seconds_since(start);
  std::string summary = r.summary();
  while (!summary.empty() && summary.back() == '\n') summary.pop_back();
  return {r.passed && secs < 30.0, summary + ", " + fmt(secs) + " s (limit 30 s)"};
}

// 2. 20 synthetic sequences are memorized within 200 epochs.
Outcome memorization() {
  const auto start = Clock::now();
  Model m = synthetic::model(16, 7);
  const auto data = synthetic::labeled_set(7, 20);
  TrainConfig c = TrainConfig::supervised_defaults();
  c.epochs = 200;
  c.adam.learning_rate = 0.01;
  c.seed = 3;
  train_supervised(data, m, c);
  const double acc = token_accuracy(m, data);
  const double secs = seconds_since(start);
  return {acc >= 0.99 && secs < 60.0,
          "token accuracy " + fmt(acc) + " (need >= 0.99), " + fmt(secs) + " s (limit 60 s)"};
}

double tagging_f1(const Model& m, const std::vector<TaggedExample>& test) {
  MatchCounts counts;
  for (const auto& ex : test) {
    const auto pred = decode_spans(m.predict_tags(ex.token_ids));
    const auto gold = decode_spans(ex.tags);
    counts += approximate_match(pred, gold);
  }
  return prf(counts).f1;
}

// 3. Pretraining on the drug task reaches high held-out accuracy and does not
// hurt downstream tagging on a disjoint labeled set.
Outcome pretraining_transfer() {
  const auto start = Clock::now();
  constexpr std::size_t kDim = 16;
  constexpr std::size_t kTrials = 10;

  Model pretrained = synthetic::model(kDim, 100);
  TrainConfig pc = TrainConfig::pretrain_defaults();
  pc.batch_size = 16;
  pc.epochs = 15;
  pc.adam.learning_rate = 0.01;
  pc.seed = 100;
  const TrainingLog log = pretrain(synthetic::pretrain_corpus(100, 1000), pretrained, pc);
  const double drug_acc = log.records.back().accuracy.value_or(0.0);

  const auto train = synthetic::labeled_set(200, 40);
  const auto test = synthetic::labeled_set(300, 200);
  double with = 0.0, without = 0.0;
  for (std::size_t i = 0; i < kTrials; ++i) {
    TrainConfig sc = TrainConfig::supervised_defaults();
    sc.adam.learning_rate = 0.01;
    sc.seed = 1 + i;

    Model a = pretrained;
    train_supervised(train, a, sc);
    with += tagging_f1(a, test);

    Model b = synthetic::model(kDim, 1 + i);
    train_supervised(train, b, sc);
    without += tagging_f1(b, test);
  }
  with /= kTrials;
  without /= kTrials;
  const double secs = seconds_since(start);
  const bool pass = drug_acc > 0.9 && with >= without - 0.01 && secs < 300.0;
  return {pass, "held-out drug accuracy " + fmt(drug_acc) + " (need > 0.9), mean F1 pretrained " +
                    fmt(with) + " vs random init " + fmt(without) + " (need >= random - 0.01), " +
                    fmt(secs) + " s (limit 300 s)"};
}

// 4. Span matching against the brute-force checker, plus hand-computed scores.
Outcome evaluation_oracle() {
  std::mt19937_64 rng(4);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t length = 1 + rng() % 30;
    const auto pred = oracle::random_disjoint_spans(rng, length);
    const auto gold = oracle::random_disjoint_spans(rng, length);
    if (!(approximate_match(pred, gold) == oracle::brute_force_match(pred, gold))) ++mismatches;
  }
  const Scores s = prf({3, 4, 5});
  const double f1 = 2.0 * 0.75 * 0.6 / (0.75 + 0.6);
  const bool hand = std::abs(s.precision - 0.75) < 1e-9 && std::abs(s.recall - 0.6) < 1e-9 &&
                    std::abs(s.f1 - f1) < 1e-9 && std::abs(s.f1 - 2.0 / 3.0) < 1e-9;
  return {mismatches == 0 && hand, std::to_string(mismatches) +
                                       " mismatches in 1000 configurations; prf(3,4,5) = " +
                                       fmt(s.precision) + "/" + fmt(s.recall) + "/" + fmt(s.f1)};
}

// 5. Tweets that differ only in the drug mentioned look the same to the model.
Outcome drug_mask_invariance(const fs::path& fixtures) {
  const DrugLexicon lexicon = DrugLexicon::load((fixtures / "drugs.txt").string());
  const StopwordSet stop = load_stopwords((fixtures / "stopwords.txt").string());
  const std::string frame[2] = {"Been on ", " for a week and the headaches wont stop @doc http://t.co/x"};

  std::vector<TokenList> masked;
  for (const std::string& name : lexicon.names()) {
    for (const std::string& spelled : {name, std::string(1, static_cast<char>(std::toupper(name[0]))) + name.substr(1)}) {
      const MaskResult r = mask_drug({preprocess_text(frame[0] + spelled + frame[1], &stop), name}, lexicon);
      if (r.status != MaskStatus::kKept) return {false, "tweet mentioning " + spelled + " was rejected"};
      masked.push_back(r.example->tweet.tokens);
    }
  }
  std::size_t differing_inputs = 0, differing_outputs = 0;
  const Vocabulary vocab = build_vocabulary(masked, kDefaultVocabularyCap);
  ModelConfig mc;
  mc.embedding_dim = 6;
  mc.hidden_dim = 5;
  mc.drug_count = lexicon.size();
  const Model model(mc, vocab, random_embeddings(vocab, 6, 9), lexicon.names(), 9);
  const auto ids0 = vocab.indices(masked[0]);
  const Vector drug0 = model.drug_distribution(ids0);
  const auto tags0 = model.tag_distributions(ids0);
  for (const TokenList& tokens : masked) {
    if (tokens != masked[0]) ++differing_inputs;
    const auto ids = vocab.indices(tokens);
    if (model.drug_distribution(ids) != drug0 || model.tag_distributions(ids) != tags0)
      ++differing_outputs;
  }
  return {differing_inputs == 0 && differing_outputs == 0,
          std::to_string(masked.size()) + " variants; " + std::to_string(differing_inputs) +
              " differing masked sequences, " + std::to_string(differing_outputs) +
              " differing model outputs"};
}

// 6. Two full runs with one seed write identical checkpoints and reports.
Outcome determinism(const fs::path& fixtures) {
  auto run = [&](const fs::path& dir) {
    fs::remove_all(dir);
    fs::create_directories(dir);
    RunConfig c;
    c.unlabeled = (fixtures / "unlabeled.tsv").string();
    c.examples = (dir / "examples.tsv").string();
    c.train = (fixtures / "train.tsv").string();
    c.test = (fixtures / "test.tsv").string();
    c.embeddings = (fixtures / "embeddings.txt").string();
    c.lexicon = (fixtures / "drugs.txt").string();
    c.stopwords = (fixtures / "stopwords.txt").string();
    c.checkpoint_dir = dir.string();
    c.log = (dir / "log.jsonl").string();
    c.hidden_dim = 8;
    c.pretrain_epochs = 3;
    c.pretrain_batch_size = 32;
    c.epochs = 2;
    c.learning_rate = 0.01;
    c.seed = 42;

    const DrugLexicon lexicon = DrugLexicon::load(c.lexicon);
    const StopwordSet stop = load_stopwords(c.stopwords);
    preprocess_corpus(c.unlabeled, lexicon, &stop, true, c.examples);
    std::ostringstream out;
    c.init_checkpoint = run_pretrain(c, out).checkpoint_path;
    run_train(c, out);
    c.report = (dir / "single.tsv").string();
    run_evaluate(c, out);
    c.retrain = true;
    c.trials = 3;
    c.parallel_trials = 3;
    c.report = (dir / "trials.tsv").string();
    run_evaluate(c, out);
  };
  const fs::path base = fs::temp_directory_path() / "adr-acceptance-determinism";
  run(base / "a");
  run(base / "b");
  std::size_t differing = 0;
  std::string which;
  for (const char* f : {"examples.tsv", "pretrain.ckpt", "train.ckpt", "single.tsv", "trials.tsv"}) {
    if (read_file(base / "a" / f) != read_file(base / "b" / f) || read_file(base / "a" / f).empty()) {
      ++differing;
      which += std::string(" ") + f;
    }
  }
  fs::remove_all(base);
  return {differing == 0, differing == 0 ? "examples, checkpoints and reports byte-identical"
                                         : "differing or empty:" + which};
}

// 7. IO encoding round trip and the weight-gain example.
Outcome io_round_trip() {
  std::mt19937_64 rng(7);
  std::size_t failures = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t length = 1 + rng() % 40;
    const auto spans = oracle::random_disjoint_spans(rng, length, /*non_adjacent=*/true);
    if (decode_spans(encode(length, spans)) != spans) ++failures;
  }
  const std::vector<std::string> tokens = {"seroquel", "i",      "take", "in", "severe", "situations",
                                           "because",  "weight", "gain", "is", "not",    "cool"};
  const std::vector<Span> gold = {{7, 9, EntityLabel::kAdr}};
  const TagSequence tags = encode(tokens.size(), gold);
  bool example = true;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const bool inside = tokens[i] == "weight" || tokens[i] == "gain";
    example = example && tags[i] == (inside ? TagLabel::kIAdr : TagLabel::kO);
  }
  return {failures == 0 && example, std::to_string(failures) +
                                        " round-trip failures in 1000 span sets; weight gain example " +
                                        (example ? "ok" : "wrong")};
}

// 8. First Adam step equals -lr * g / (|g| + eps) for constant gradients.
Outcome adam_sanity() {
  double worst = 0.0;
  for (double lr : {1e-3, 1e-2, 0.5}) {
    for (double g : {1e-9, 1e-4, -0.3, 2.0, -75.0}) {
      AdamConfig c;
      c.learning_rate = lr;
      Parameter p("w", 3, 4);
      p.value.fill(0.125);
      p.grad.fill(g);
      adam_step(p, c, 1);
      const double expected = -lr * g / (std::abs(g) + c.epsilon);
      for (double v : p.value.values()) worst = std::max(worst, std::abs((v - 0.125) - expected));
    }
  }
  return {worst <= 1e-12, "worst deviation " + fmt(worst) + " (limit 1e-12)"};
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path fixtures = argc > 1 ? fs::path(argv[1]) : fs::path(ADR_DATA_DIR) / "fixtures";
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"gradient fidelity", gradient_fidelity},
      {"memorization", memorization},
      {"pretraining transfer", pretraining_transfer},
      {"evaluation oracle", evaluation_oracle},
      {"drug-mask invariance", [&] { return drug_mask_invariance(fixtures); }},
      {"determinism", [&] { return determinism(fixtures); }},
      {"IO round trip", io_round_trip},
      {"Adam sanity", adam_sanity},
  };
  int failed = 0, index = 0;
  for (const auto& [name, check] : criteria) {
    ++index;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << index << "] " << name << ": " << o.detail
              << std::endl;
  }
  std::cout << (8 - failed) << "/8 acceptance criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
