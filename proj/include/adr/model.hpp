// SPDX-License-Identifier: Apache-2.0
//
// Bidirectional LSTM encoder with two softmax heads: one classifies the
// masked drug from the mean-pooled encoder states, the other tags every
// position. Both heads read the same encoder parameters.
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "adr/encoding.hpp"
#include "adr/numerics.hpp"
#include "adr/text.hpp"

namespace adr {

enum Gate : std::size_t { kUpdateGate = 0, kForgetGate = 1, kCandidateGate = 2, kOutputGate = 3 };
inline constexpr std::size_t kGateCount = 4;

struct LSTMCellParams {
  LSTMCellParams() = default;
  LSTMCellParams(const std::string& prefix, std::size_t hidden_dim, std::size_t input_dim,
                 bool use_bias = true);

  std::array<Parameter, kGateCount> recurrent;   // H x H
  std::array<Parameter, kGateCount> projection;  // H x E
  std::array<Parameter, kGateCount> bias;        // H x 1
  bool use_bias = true;

  std::size_t hidden_dim() const { return recurrent[0].value.rows(); }
  std::size_t input_dim() const { return projection[0].value.cols(); }
  // Biases are listed only when enabled.
  std::vector<Parameter*> parameters();
};

// Everything a backward pass needs from one recurrence step.
struct CellStep {
  Vector h;
  Vector m;
  std::array<Vector, kGateCount> gates;
  Vector tanh_m;
};

CellStep lstm_cell_step(const LSTMCellParams& cell, std::span<const double> h_prev,
                        std::span<const double> m_prev, std::span<const double> x);

struct BiLSTMParams {
  LSTMCellParams forward_cell;
  LSTMCellParams backward_cell;

  std::size_t hidden_dim() const { return forward_cell.hidden_dim(); }
  std::size_t input_dim() const { return forward_cell.input_dim(); }
  std::vector<Parameter*> parameters();
};

struct EncoderTrace {
  std::vector<Vector> inputs;
  std::vector<CellStep> forward_steps;   // left-to-right, indexed by position
  std::vector<CellStep> backward_steps;  // right-to-left, indexed by position
  std::vector<Vector> outputs;           // [forward h_t ; backward h_t]
};

EncoderTrace bilstm_trace(const BiLSTMParams& params, std::span<const Vector> x_seq);
std::vector<Vector> bilstm_forward(const BiLSTMParams& params, std::span<const Vector> x_seq);

// Accumulates parameter gradients given dL/d(outputs). Returns dL/d(inputs).
std::vector<Vector> bilstm_backward(BiLSTMParams& params, const EncoderTrace& trace,
                                    std::span<const Vector> d_outputs);

enum class PoolingMode { kMean, kSum };

Vector mean_pool(std::span<const Vector> h_seq, std::size_t valid_length,
                 PoolingMode mode = PoolingMode::kMean);

struct SoftmaxHead {
  SoftmaxHead() = default;
  SoftmaxHead(const std::string& prefix, std::size_t classes, std::size_t input_dim);

  Parameter weight;  // classes x input
  Parameter bias;    // classes x 1

  std::size_t classes() const { return weight.value.rows(); }
  std::size_t input_dim() const { return weight.value.cols(); }
  Vector logits(std::span<const double> x) const;
  // Adds the gradient for dL/dlogits and returns dL/dx.
  Vector backward(std::span<const double> x, std::span<const double> d_logits);
  std::vector<Parameter*> parameters() { return {&weight, &bias}; }
};

struct DrugHead : SoftmaxHead {
  using SoftmaxHead::SoftmaxHead;
};

struct TagHead : SoftmaxHead {
  using SoftmaxHead::SoftmaxHead;
};

Vector predict_drug(const DrugHead& head, std::span<const double> pooled);
std::vector<Vector> tag_forward(const TagHead& head, std::span<const Vector> h_seq);

// Sum of per-position cross-entropy, skipping PAD positions.
double sequence_loss(std::span<const Vector> predictions, std::span<const TagLabel> gold);

inline constexpr std::size_t kDefaultHiddenDim = 500;

struct ModelConfig {
  std::size_t embedding_dim = kDefaultEmbeddingDim;
  std::size_t hidden_dim = kDefaultHiddenDim;
  std::size_t drug_count = 2;
  PoolingMode pooling = PoolingMode::kMean;
  bool gate_biases = true;
  bool train_embeddings = false;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

enum class LossKind { kNone, kDrug, kTag };

// Recorded forward pass; consumed by Model::backward.
struct LossContext {
  LossKind kind = LossKind::kNone;
  std::vector<int> token_ids;
  EncoderTrace trace;
  double loss = 0.0;

  Vector pooled;
  Vector drug_probs;
  std::size_t drug_target = 0;

  std::vector<Vector> tag_probs;
  TagSequence gold;
};

class Model {
 public:
  Model() = default;
  // Weights uniform in +-sqrt(6/(fan_in+fan_out)); forget-gate bias 1.
  Model(const ModelConfig& config, Vocabulary vocab, EmbeddingTable embeddings,
        std::vector<std::string> drug_names, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return vocab_; }
  const std::vector<std::string>& drug_names() const { return drug_names_; }
  std::uint64_t seed() const { return seed_; }
  // The seed recorded in checkpoints; does not re-initialize anything.
  void set_seed(std::uint64_t seed) { seed_ = seed; }

  BiLSTMParams encoder;
  DrugHead drug_head;
  TagHead tag_head;
  Parameter embeddings;  // vocab x E, frozen unless config.train_embeddings

  std::vector<Parameter*> encoder_parameters();  // includes embeddings when trainable
  std::vector<Parameter*> drug_head_parameters() { return drug_head.parameters(); }
  std::vector<Parameter*> tag_head_parameters() { return tag_head.parameters(); }
  // Every stored matrix, trainable or not, in checkpoint order.
  std::vector<Parameter*> all_parameters();
  std::vector<const Parameter*> all_parameters() const;
  void zero_grad();

  std::vector<Vector> embed(std::span<const int> token_ids) const;
  std::vector<Vector> encode(std::span<const int> token_ids) const;

  Vector drug_distribution(std::span<const int> token_ids) const;
  std::vector<Vector> tag_distributions(std::span<const int> token_ids) const;
  // Argmax per position; a PAD prediction on a real token is reported as O.
  TagSequence predict_tags(std::span<const int> token_ids) const;

  LossContext drug_loss(std::span<const int> token_ids, std::size_t target) const;
  // gold may end with PAD positions; those are excluded.
  LossContext tag_loss(std::span<const int> token_ids, std::span<const TagLabel> gold) const;
  // Adds scale * dLoss/dParam into every involved Parameter.grad.
  void backward(const LossContext& ctx, double scale = 1.0);

 private:
  ModelConfig config_;
  Vocabulary vocab_;
  std::vector<std::string> drug_names_;
  std::uint64_t seed_ = 0;
};

}  // namespace adr
