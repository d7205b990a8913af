// SPDX-License-Identifier: Apache-2.0
#include "adr/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>
#include <set>

#include <json.hpp>

#include "adr/error.hpp"

namespace adr {

void AdamConfig::validate() const {
  if (!(learning_rate > 0.0)) throw UsageError("learning_rate must be > 0");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw UsageError("beta1 must be in (0,1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw UsageError("beta2 must be in (0,1)");
  if (!(epsilon > 0.0)) throw UsageError("adam epsilon must be > 0");
}

void adam_step(Parameter& param, const AdamConfig& config, std::uint64_t t) {
  if (t < 1) throw UsageError("adam step index must be >= 1");
  if (!param.grad.all_finite()) {
    throw NumericalError("non-finite gradient in parameter " + param.name);
  }
  const double b1 = config.beta1, b2 = config.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(t));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(t));
  auto w = param.value.values();
  auto g = param.grad.values();
  auto m = param.adam_m.values();
  auto v = param.adam_v.values();
  for (std::size_t i = 0; i < w.size(); ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
    const double m_hat = m[i] / correction1;
    const double v_hat = v[i] / correction2;
    w[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
  }
  param.zero_grad();
}

AdamOptimizer::AdamOptimizer(AdamConfig config) : config_(config) { config_.validate(); }

void AdamOptimizer::step(std::span<Parameter* const> params) {
  ++t_;
  for (Parameter* p : params) adam_step(*p, config_, t_);
}

std::string_view phase_name(Phase phase) {
  return phase == Phase::kPretrain ? "pretrain" : "supervised";
}

TrainConfig TrainConfig::pretrain_defaults() {
  TrainConfig c;
  c.phase = Phase::kPretrain;
  c.batch_size = 128;
  c.epochs = 30;
  return c;
}

TrainConfig TrainConfig::supervised_defaults() {
  TrainConfig c;
  c.phase = Phase::kSupervised;
  c.batch_size = 1;
  c.epochs = 5;
  return c;
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw UsageError("batch_size must be >= 1");
  if (max_seq_len < 1) throw UsageError("max_seq_len must be >= 1");
  adam.validate();
}

PaddedBatch pad_batch(std::span<const std::vector<int>> examples, std::size_t max_len) {
  if (max_len < 1) throw UsageError("pad_batch max_len must be >= 1");
  PaddedBatch batch;
  batch.max_len = max_len;
  batch.ids.assign(examples.size() * max_len, kPadIndex);
  batch.lengths.reserve(examples.size());
  for (std::size_t r = 0; r < examples.size(); ++r) {
    if (examples[r].empty()) {
      throw UsageError("pad_batch: example " + std::to_string(r) + " is empty");
    }
    const std::size_t n = std::min(examples[r].size(), max_len);
    std::copy_n(examples[r].begin(), n, batch.ids.begin() + static_cast<std::ptrdiff_t>(r * max_len));
    batch.lengths.push_back(n);
  }
  return batch;
}

std::string TrainingLog::to_jsonl() const {
  std::string out;
  for (const EpochRecord& r : records) {
    nlohmann::ordered_json j;
    j["phase"] = phase_name(r.phase);
    j["epoch"] = r.epoch;
    j["mean_loss"] = r.mean_loss;
    if (r.accuracy) j["accuracy"] = *r.accuracy;
    j["wall_time"] = r.wall_time;
    out += j.dump();
    out += '\n';
  }
  return out;
}

void TrainingLog::append_to(const std::string& path) const {
  std::ofstream out(path, std::ios::app);
  if (!out) throw UsageError("cannot write training log: " + path);
  out << to_jsonl();
}

bool in_heldout_split(std::string_view id) { return fnv1a(id) % 10 == 0; }

double drug_accuracy(const Model& model, std::span<const PretrainExample> examples) {
  if (examples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const PretrainExample& ex : examples) {
    const Vector p = model.drug_distribution(ex.token_ids);
    const auto best = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    if (best == ex.drug_label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

double token_accuracy(const Model& model, std::span<const TaggedExample> examples) {
  std::size_t correct = 0, total = 0;
  for (const TaggedExample& ex : examples) {
    const TagSequence predicted = model.predict_tags(ex.token_ids);
    for (std::size_t t = 0; t < ex.tags.size() && t < predicted.size(); ++t) {
      if (ex.tags[t] == TagLabel::kPad) continue;
      ++total;
      if (predicted[t] == ex.tags[t]) ++correct;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void check_loss(double loss, const std::string& id) {
  if (!std::isfinite(loss)) throw NumericalError("non-finite loss on example " + id);
}

std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  return order;
}

std::size_t truncate_examples(std::vector<PretrainExample>& examples, std::size_t max_len) {
  std::size_t truncated = 0;
  for (auto& ex : examples) {
    if (ex.token_ids.size() > max_len) {
      ex.token_ids.resize(max_len);
      ++truncated;
    }
  }
  return truncated;
}

}  // namespace

TrainingLog pretrain(std::span<const PretrainExample> corpus, Model& model,
                     const TrainConfig& config) {
  config.validate();
  if (corpus.empty()) throw UsageError("pretraining corpus is empty");
  if (model.config().drug_count < 2) throw UsageError("drug catalog must hold at least 2 names");
  std::set<std::size_t> labels;
  for (const auto& ex : corpus) {
    if (ex.drug_label >= model.config().drug_count) {
      throw DataError("drug label out of range in example " + ex.id);
    }
    if (ex.token_ids.empty()) throw DataError("empty token sequence in example " + ex.id);
    labels.insert(ex.drug_label);
  }
  if (labels.size() < 2) {
    throw UsageError("pretraining corpus mentions only one drug; at least 2 are required");
  }

  std::vector<PretrainExample> train, heldout;
  for (const auto& ex : corpus) (in_heldout_split(ex.id) ? heldout : train).push_back(ex);
  if (train.empty()) throw UsageError("no pretraining examples left after the held-out split");

  TrainingLog log;
  log.train_examples = train.size();
  log.heldout_examples = heldout.size();
  log.truncated = truncate_examples(train, config.max_seq_len) +
                  truncate_examples(heldout, config.max_seq_len);
  if (log.truncated > 0) {
    std::cerr << "warning: truncated " << log.truncated << " sequences to "
              << config.max_seq_len << " tokens\n";
  }

  std::vector<Parameter*> params = model.encoder_parameters();
  for (Parameter* p : model.drug_head_parameters()) params.push_back(p);
  for (Parameter* p : params) p->zero_grad();

  const auto start = Clock::now();
  auto heldout_accuracy = [&]() -> std::optional<double> {
    if (heldout.empty()) return std::nullopt;
    return drug_accuracy(model, heldout);
  };
  {
    double total = 0.0;
    for (const auto& ex : train) total += model.drug_loss(ex.token_ids, ex.drug_label).loss;
    log.records.push_back({Phase::kPretrain, 0, total / static_cast<double>(train.size()),
                           heldout_accuracy(), seconds_since(start)});
  }

  AdamOptimizer optimizer(config.adam);
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order = iota_indices(train.size());
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const double scale = 1.0 / static_cast<double>(end - begin);
      for (std::size_t k = begin; k < end; ++k) {
        const PretrainExample& ex = train[order[k]];
        LossContext ctx = model.drug_loss(ex.token_ids, ex.drug_label);
        check_loss(ctx.loss, ex.id);
        total += ctx.loss;
        model.backward(ctx, scale);
      }
      optimizer.step(params);
    }
    log.records.push_back({Phase::kPretrain, epoch, total / static_cast<double>(train.size()),
                           heldout_accuracy(), seconds_since(start)});
  }
  return log;
}

TrainingLog train_supervised(std::span<const TaggedExample> data, Model& model,
                             const TrainConfig& config) {
  config.validate();
  if (data.empty()) throw UsageError("supervised training data is empty");
  std::vector<TaggedExample> train(data.begin(), data.end());
  TrainingLog log;
  log.train_examples = train.size();
  for (auto& ex : train) {
    if (ex.token_ids.size() != ex.tags.size()) {
      throw DataError("token/tag misalignment in record " + ex.id + ": " +
                      std::to_string(ex.token_ids.size()) + " tokens, " +
                      std::to_string(ex.tags.size()) + " tags");
    }
    if (ex.token_ids.empty()) throw DataError("empty record " + ex.id);
    if (ex.token_ids.size() > config.max_seq_len) {
      ex.token_ids.resize(config.max_seq_len);
      ex.tags.resize(config.max_seq_len);
      ++log.truncated;
    }
  }
  if (log.truncated > 0) {
    std::cerr << "warning: truncated " << log.truncated << " sequences to "
              << config.max_seq_len << " tokens\n";
  }

  std::vector<Parameter*> params = model.encoder_parameters();
  for (Parameter* p : model.tag_head_parameters()) params.push_back(p);
  for (Parameter* p : params) p->zero_grad();

  AdamOptimizer optimizer(config.adam);
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order = iota_indices(train.size());
  const auto start = Clock::now();
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    std::size_t correct = 0, counted = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const double scale = 1.0 / static_cast<double>(end - begin);
      for (std::size_t k = begin; k < end; ++k) {
        const TaggedExample& ex = train[order[k]];
        LossContext ctx = model.tag_loss(ex.token_ids, ex.tags);
        check_loss(ctx.loss, ex.id);
        total += ctx.loss;
        for (std::size_t t = 0; t < ctx.gold.size(); ++t) {
          const Vector& p = ctx.tag_probs[t];
          const auto best = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
          ++counted;
          if (best == static_cast<std::size_t>(tag_index(ctx.gold[t]))) ++correct;
        }
        model.backward(ctx, scale);
      }
      optimizer.step(params);
    }
    std::optional<double> accuracy;
    if (counted > 0) accuracy = static_cast<double>(correct) / static_cast<double>(counted);
    log.records.push_back({Phase::kSupervised, epoch, total / static_cast<double>(train.size()),
                           accuracy, seconds_since(start)});
  }
  return log;
}

}  // namespace adr
