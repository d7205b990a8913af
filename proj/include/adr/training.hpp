// SPDX-License-Identifier: Apache-2.0
//
// Adam, batching and the two training phases: drug-name pretraining on
// masked tweets, then supervised tagging on the same encoder.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adr/encoding.hpp"
#include "adr/model.hpp"

namespace adr {

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

// One Adam update of `param` at step t (1-based). Zeroes param.grad.
// Throws NumericalError naming the parameter if the gradient is not finite.
void adam_step(Parameter& param, const AdamConfig& config, std::uint64_t t);

class AdamOptimizer {
 public:
  explicit AdamOptimizer(AdamConfig config = {});
  // Advances the step counter once and updates every parameter.
  void step(std::span<Parameter* const> params);
  std::uint64_t steps() const { return t_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  std::uint64_t t_ = 0;
};

enum class Phase { kPretrain, kSupervised };
std::string_view phase_name(Phase phase);

inline constexpr std::size_t kDefaultMaxSequenceLength = 40;

struct TrainConfig {
  Phase phase = Phase::kSupervised;
  std::size_t batch_size = 1;
  std::size_t epochs = 5;
  std::size_t max_seq_len = kDefaultMaxSequenceLength;
  std::uint64_t seed = 0;
  AdamConfig adam;

  static TrainConfig pretrain_defaults();    // batch 128, 30 epochs
  static TrainConfig supervised_defaults();  // batch 1, 5 epochs
  void validate() const;
};

struct PaddedBatch {
  std::size_t max_len = 0;
  std::vector<int> ids;  // row-major, rows x max_len, padded with kPadIndex
  std::vector<std::size_t> lengths;

  std::size_t rows() const { return lengths.size(); }
  std::span<const int> row(std::size_t r) const { return {ids.data() + r * max_len, max_len}; }
  std::span<const int> valid(std::size_t r) const { return {ids.data() + r * max_len, lengths[r]}; }
};

// Truncates to max_len and pads with PAD. Empty sequences are rejected.
PaddedBatch pad_batch(std::span<const std::vector<int>> examples, std::size_t max_len);

struct PretrainExample {
  std::string id;
  std::vector<int> token_ids;
  std::size_t drug_label = 0;
};

struct TaggedExample {
  std::string id;
  std::vector<int> token_ids;
  TagSequence tags;
};

struct EpochRecord {
  Phase phase = Phase::kPretrain;
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  std::optional<double> accuracy;
  double wall_time = 0.0;  // seconds since the phase started
};

struct TrainingLog {
  std::vector<EpochRecord> records;
  std::size_t train_examples = 0;
  std::size_t heldout_examples = 0;
  std::size_t truncated = 0;

  // One JSON object per line.
  std::string to_jsonl() const;
  void append_to(const std::string& path) const;
};

// True for the ~10% of tweet ids that form the pretraining held-out split.
bool in_heldout_split(std::string_view id);

double drug_accuracy(const Model& model, std::span<const PretrainExample> examples);
// Non-PAD token accuracy.
double token_accuracy(const Model& model, std::span<const TaggedExample> examples);

// Minimizes mean drug cross-entropy over the encoder and drug head. Record 0
// holds the loss before any update.
TrainingLog pretrain(std::span<const PretrainExample> corpus, Model& model,
                     const TrainConfig& config);

// Minimizes per-sequence tagging loss over the encoder and tag head, with
// fresh optimizer moments.
TrainingLog train_supervised(std::span<const TaggedExample> data, Model& model,
                             const TrainConfig& config);

inline constexpr int kCheckpointVersion = 1;

// Text container with hex-float values, so a round trip is bit-exact.
void save_checkpoint(const Model& model, const std::string& path);
// With `expected`, any difference in model dimensions is a DimensionError.
Model load_checkpoint(const std::string& path,
                      const std::optional<ModelConfig>& expected = std::nullopt);

}  // namespace adr
