// SPDX-License-Identifier: Apache-2.0
#include "adr/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "adr/error.hpp"

namespace adr {
namespace {

const char* kGateNames[kGateCount] = {"update", "forget", "candidate", "output"};

void xavier_init(Matrix& m, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (double& v : m.values()) v = dist(rng);
}

void check_size(std::span<const double> v, std::size_t expected, const char* what) {
  if (v.size() != expected) {
    throw DimensionError(std::string(what) + " has size " + std::to_string(v.size()) +
                         ", expected " + std::to_string(expected));
  }
}

}  // namespace

LSTMCellParams::LSTMCellParams(const std::string& prefix, std::size_t hidden_dim,
                               std::size_t input_dim, bool use_bias_in)
    : use_bias(use_bias_in) {
  for (std::size_t g = 0; g < kGateCount; ++g) {
    recurrent[g] = Parameter(prefix + ".recurrent." + kGateNames[g], hidden_dim, hidden_dim);
    projection[g] = Parameter(prefix + ".projection." + kGateNames[g], hidden_dim, input_dim);
    bias[g] = Parameter(prefix + ".bias." + kGateNames[g], hidden_dim, 1);
  }
}

std::vector<Parameter*> LSTMCellParams::parameters() {
  std::vector<Parameter*> out;
  for (auto& p : recurrent) out.push_back(&p);
  for (auto& p : projection) out.push_back(&p);
  if (use_bias) {
    for (auto& p : bias) out.push_back(&p);
  }
  return out;
}

CellStep lstm_cell_step(const LSTMCellParams& cell, std::span<const double> h_prev,
                        std::span<const double> m_prev, std::span<const double> x) {
  const std::size_t hidden = cell.hidden_dim();
  check_size(h_prev, hidden, "previous hidden state");
  check_size(m_prev, hidden, "previous cell state");
  check_size(x, cell.input_dim(), "input vector");

  CellStep step;
  for (std::size_t g = 0; g < kGateCount; ++g) {
    Vector& pre = step.gates[g];
    if (cell.use_bias) {
      auto b = cell.bias[g].value.values();
      pre.assign(b.begin(), b.end());
    } else {
      pre.assign(hidden, 0.0);
    }
    matvec_accumulate(cell.recurrent[g].value, h_prev, pre);
    matvec_accumulate(cell.projection[g].value, x, pre);
    for (double& v : pre) v = (g == kCandidateGate) ? std::tanh(v) : sigmoid(v);
  }
  step.m.resize(hidden);
  step.tanh_m.resize(hidden);
  step.h.resize(hidden);
  const auto& u = step.gates[kUpdateGate];
  const auto& f = step.gates[kForgetGate];
  const auto& c = step.gates[kCandidateGate];
  const auto& o = step.gates[kOutputGate];
  for (std::size_t i = 0; i < hidden; ++i) {
    step.m[i] = f[i] * m_prev[i] + u[i] * c[i];
    step.tanh_m[i] = std::tanh(step.m[i]);
    step.h[i] = o[i] * step.tanh_m[i];
  }
  return step;
}

std::vector<Parameter*> BiLSTMParams::parameters() {
  auto out = forward_cell.parameters();
  auto back = backward_cell.parameters();
  out.insert(out.end(), back.begin(), back.end());
  return out;
}

EncoderTrace bilstm_trace(const BiLSTMParams& params, std::span<const Vector> x_seq) {
  if (x_seq.empty()) throw UsageError("bilstm_forward on an empty sequence");
  const std::size_t hidden = params.hidden_dim();
  if (params.backward_cell.hidden_dim() != hidden ||
      params.backward_cell.input_dim() != params.input_dim()) {
    throw DimensionError("forward and backward cells have different shapes");
  }
  const std::size_t n = x_seq.size();
  EncoderTrace trace;
  trace.inputs.assign(x_seq.begin(), x_seq.end());
  trace.forward_steps.resize(n);
  trace.backward_steps.resize(n);

  const Vector zeros(hidden, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    const Vector& h_prev = t == 0 ? zeros : trace.forward_steps[t - 1].h;
    const Vector& m_prev = t == 0 ? zeros : trace.forward_steps[t - 1].m;
    trace.forward_steps[t] = lstm_cell_step(params.forward_cell, h_prev, m_prev, x_seq[t]);
  }
  for (std::size_t k = n; k-- > 0;) {
    const Vector& h_prev = k == n - 1 ? zeros : trace.backward_steps[k + 1].h;
    const Vector& m_prev = k == n - 1 ? zeros : trace.backward_steps[k + 1].m;
    trace.backward_steps[k] = lstm_cell_step(params.backward_cell, h_prev, m_prev, x_seq[k]);
  }

  trace.outputs.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    Vector& out = trace.outputs[t];
    out.reserve(2 * hidden);
    out.insert(out.end(), trace.forward_steps[t].h.begin(), trace.forward_steps[t].h.end());
    out.insert(out.end(), trace.backward_steps[t].h.begin(), trace.backward_steps[t].h.end());
  }
  return trace;
}

std::vector<Vector> bilstm_forward(const BiLSTMParams& params, std::span<const Vector> x_seq) {
  return bilstm_trace(params, x_seq).outputs;
}

namespace {

// Backpropagation through time for one direction. `order` lists positions
// in the order the recurrence visited them; dh_out[t] is the gradient
// arriving at the hidden state of position t from above.
void cell_backward(LSTMCellParams& cell, std::span<const CellStep> steps,
                   std::span<const Vector> inputs, std::span<const std::size_t> order,
                   std::span<const Vector> dh_out, std::vector<Vector>& dx) {
  const std::size_t hidden = cell.hidden_dim();
  const Vector zeros(hidden, 0.0);
  Vector dh_next(hidden, 0.0);
  Vector dm_next(hidden, 0.0);
  std::array<Vector, kGateCount> d_pre;
  for (auto& v : d_pre) v.resize(hidden);

  for (std::size_t k = order.size(); k-- > 0;) {
    const std::size_t t = order[k];
    const CellStep& s = steps[t];
    const Vector& h_prev = k == 0 ? zeros : steps[order[k - 1]].h;
    const Vector& m_prev = k == 0 ? zeros : steps[order[k - 1]].m;
    const auto& u = s.gates[kUpdateGate];
    const auto& f = s.gates[kForgetGate];
    const auto& c = s.gates[kCandidateGate];
    const auto& o = s.gates[kOutputGate];

    for (std::size_t i = 0; i < hidden; ++i) {
      const double dh = dh_out[t][i] + dh_next[i];
      const double dm = dm_next[i] + dh * o[i] * (1.0 - s.tanh_m[i] * s.tanh_m[i]);
      d_pre[kOutputGate][i] = dh * s.tanh_m[i] * o[i] * (1.0 - o[i]);
      d_pre[kForgetGate][i] = dm * m_prev[i] * f[i] * (1.0 - f[i]);
      d_pre[kUpdateGate][i] = dm * c[i] * u[i] * (1.0 - u[i]);
      d_pre[kCandidateGate][i] = dm * u[i] * (1.0 - c[i] * c[i]);
      dm_next[i] = dm * f[i];
    }

    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    for (std::size_t g = 0; g < kGateCount; ++g) {
      outer_accumulate(cell.recurrent[g].grad, d_pre[g], h_prev);
      outer_accumulate(cell.projection[g].grad, d_pre[g], inputs[t]);
      if (cell.use_bias) {
        auto b = cell.bias[g].grad.values();
        for (std::size_t i = 0; i < hidden; ++i) b[i] += d_pre[g][i];
      }
      matvec_transposed_accumulate(cell.recurrent[g].value, d_pre[g], dh_next);
      matvec_transposed_accumulate(cell.projection[g].value, d_pre[g], dx[t]);
    }
  }
}

}  // namespace

std::vector<Vector> bilstm_backward(BiLSTMParams& params, const EncoderTrace& trace,
                                    std::span<const Vector> d_outputs) {
  const std::size_t n = trace.outputs.size();
  const std::size_t hidden = params.hidden_dim();
  if (n == 0) throw UsageError("bilstm_backward without a recorded forward pass");
  if (d_outputs.size() != n) throw DimensionError("output gradient length mismatch");

  std::vector<Vector> dh_fwd(n), dh_bwd(n);
  for (std::size_t t = 0; t < n; ++t) {
    check_size(d_outputs[t], 2 * hidden, "output gradient");
    dh_fwd[t].assign(d_outputs[t].begin(), d_outputs[t].begin() + hidden);
    dh_bwd[t].assign(d_outputs[t].begin() + hidden, d_outputs[t].end());
  }

  std::vector<Vector> dx(n, Vector(params.input_dim(), 0.0));
  std::vector<std::size_t> order(n);
  for (std::size_t t = 0; t < n; ++t) order[t] = t;
  cell_backward(params.forward_cell, trace.forward_steps, trace.inputs, order, dh_fwd, dx);
  std::reverse(order.begin(), order.end());
  cell_backward(params.backward_cell, trace.backward_steps, trace.inputs, order, dh_bwd, dx);
  return dx;
}

Vector mean_pool(std::span<const Vector> h_seq, std::size_t valid_length, PoolingMode mode) {
  if (valid_length == 0 || valid_length > h_seq.size()) {
    throw UsageError("pooling valid_length " + std::to_string(valid_length) +
                     " outside [1, " + std::to_string(h_seq.size()) + "]");
  }
  Vector out(h_seq[0].size(), 0.0);
  for (std::size_t t = 0; t < valid_length; ++t) {
    check_size(h_seq[t], out.size(), "hidden state");
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += h_seq[t][i];
  }
  if (mode == PoolingMode::kMean) {
    for (double& v : out) v /= static_cast<double>(valid_length);
  }
  return out;
}

SoftmaxHead::SoftmaxHead(const std::string& prefix, std::size_t classes, std::size_t input_dim)
    : weight(prefix + ".weight", classes, input_dim), bias(prefix + ".bias", classes, 1) {}

Vector SoftmaxHead::logits(std::span<const double> x) const {
  auto b = bias.value.values();
  Vector out(b.begin(), b.end());
  matvec_accumulate(weight.value, x, out);
  return out;
}

Vector SoftmaxHead::backward(std::span<const double> x, std::span<const double> d_logits) {
  outer_accumulate(weight.grad, d_logits, x);
  auto b = bias.grad.values();
  for (std::size_t i = 0; i < d_logits.size(); ++i) b[i] += d_logits[i];
  Vector dx(x.size(), 0.0);
  matvec_transposed_accumulate(weight.value, d_logits, dx);
  return dx;
}

Vector predict_drug(const DrugHead& head, std::span<const double> pooled) {
  return softmax(head.logits(pooled));
}

std::vector<Vector> tag_forward(const TagHead& head, std::span<const Vector> h_seq) {
  if (h_seq.empty()) throw UsageError("tag_forward on an empty sequence");
  std::vector<Vector> out;
  out.reserve(h_seq.size());
  for (const Vector& h : h_seq) out.push_back(softmax(head.logits(h)));
  return out;
}

double sequence_loss(std::span<const Vector> predictions, std::span<const TagLabel> gold) {
  if (predictions.size() != gold.size()) {
    throw DimensionError("sequence_loss: " + std::to_string(predictions.size()) +
                         " predictions for " + std::to_string(gold.size()) + " gold tags");
  }
  double total = 0.0;
  for (std::size_t t = 0; t < gold.size(); ++t) {
    if (gold[t] == TagLabel::kPad) continue;
    total += cross_entropy(predictions[t], static_cast<std::size_t>(tag_index(gold[t])));
  }
  return total;
}

Model::Model(const ModelConfig& config, Vocabulary vocab, EmbeddingTable embedding_table,
             std::vector<std::string> drug_names, std::uint64_t seed)
    : config_(config), vocab_(std::move(vocab)), drug_names_(std::move(drug_names)), seed_(seed) {
  if (config_.embedding_dim == 0 || config_.hidden_dim == 0) {
    throw UsageError("model dimensions must be positive");
  }
  if (config_.drug_count < 2) throw UsageError("the drug head needs at least 2 classes");
  if (drug_names_.size() != config_.drug_count) {
    throw UsageError("drug catalog has " + std::to_string(drug_names_.size()) +
                     " names but the model expects " + std::to_string(config_.drug_count));
  }
  if (embedding_table.table.rows() != vocab_.size() ||
      embedding_table.table.cols() != config_.embedding_dim) {
    throw DimensionError("embedding table " + embedding_table.table.shape_string() +
                         " does not match vocabulary size " + std::to_string(vocab_.size()) +
                         " and embedding dim " + std::to_string(config_.embedding_dim));
  }

  const std::size_t H = config_.hidden_dim;
  const std::size_t E = config_.embedding_dim;
  encoder.forward_cell = LSTMCellParams("encoder.forward", H, E, config_.gate_biases);
  encoder.backward_cell = LSTMCellParams("encoder.backward", H, E, config_.gate_biases);
  drug_head = DrugHead("drug_head", config_.drug_count, 2 * H);
  tag_head = TagHead("tag_head", kTagCount, 2 * H);
  embeddings = Parameter("embeddings", vocab_.size(), E);
  embeddings.value = std::move(embedding_table.table);

  std::mt19937_64 rng(seed_);
  for (LSTMCellParams* cell : {&encoder.forward_cell, &encoder.backward_cell}) {
    for (auto& p : cell->recurrent) xavier_init(p.value, rng);
    for (auto& p : cell->projection) xavier_init(p.value, rng);
    if (cell->use_bias) cell->bias[kForgetGate].value.fill(1.0);
  }
  xavier_init(drug_head.weight.value, rng);
  xavier_init(tag_head.weight.value, rng);
}

std::vector<Parameter*> Model::encoder_parameters() {
  auto out = encoder.parameters();
  if (config_.train_embeddings) out.push_back(&embeddings);
  return out;
}

std::vector<Parameter*> Model::all_parameters() {
  std::vector<Parameter*> out;
  for (LSTMCellParams* cell : {&encoder.forward_cell, &encoder.backward_cell}) {
    for (auto& p : cell->recurrent) out.push_back(&p);
    for (auto& p : cell->projection) out.push_back(&p);
    for (auto& p : cell->bias) out.push_back(&p);
  }
  for (Parameter* p : drug_head.parameters()) out.push_back(p);
  for (Parameter* p : tag_head.parameters()) out.push_back(p);
  out.push_back(&embeddings);
  return out;
}

std::vector<const Parameter*> Model::all_parameters() const {
  auto mutable_list = const_cast<Model*>(this)->all_parameters();
  return {mutable_list.begin(), mutable_list.end()};
}

void Model::zero_grad() {
  for (Parameter* p : all_parameters()) p->zero_grad();
}

std::vector<Vector> Model::embed(std::span<const int> token_ids) const {
  std::vector<Vector> out;
  out.reserve(token_ids.size());
  for (int id : token_ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab_.size()) {
      throw UsageError("token index " + std::to_string(id) + " outside vocabulary of size " +
                       std::to_string(vocab_.size()));
    }
    auto row = embeddings.value.row(static_cast<std::size_t>(id));
    out.emplace_back(row.begin(), row.end());
  }
  return out;
}

std::vector<Vector> Model::encode(std::span<const int> token_ids) const {
  return bilstm_forward(encoder, embed(token_ids));
}

Vector Model::drug_distribution(std::span<const int> token_ids) const {
  const auto h = encode(token_ids);
  return predict_drug(drug_head, mean_pool(h, h.size(), config_.pooling));
}

std::vector<Vector> Model::tag_distributions(std::span<const int> token_ids) const {
  return tag_forward(tag_head, encode(token_ids));
}

TagSequence Model::predict_tags(std::span<const int> token_ids) const {
  TagSequence tags;
  for (const Vector& p : tag_distributions(token_ids)) {
    const auto best = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    const TagLabel tag = tag_from_index(best);
    tags.push_back(tag == TagLabel::kPad ? TagLabel::kO : tag);
  }
  return tags;
}

LossContext Model::drug_loss(std::span<const int> token_ids, std::size_t target) const {
  if (target >= config_.drug_count) {
    throw UsageError("drug label " + std::to_string(target) + " outside catalog of size " +
                     std::to_string(config_.drug_count));
  }
  LossContext ctx;
  ctx.kind = LossKind::kDrug;
  ctx.token_ids.assign(token_ids.begin(), token_ids.end());
  ctx.trace = bilstm_trace(encoder, embed(token_ids));
  ctx.pooled = mean_pool(ctx.trace.outputs, ctx.trace.outputs.size(), config_.pooling);
  ctx.drug_probs = predict_drug(drug_head, ctx.pooled);
  ctx.drug_target = target;
  ctx.loss = cross_entropy(ctx.drug_probs, target);
  return ctx;
}

LossContext Model::tag_loss(std::span<const int> token_ids, std::span<const TagLabel> gold) const {
  if (token_ids.size() != gold.size()) {
    throw DimensionError("tag_loss: " + std::to_string(token_ids.size()) + " tokens but " +
                         std::to_string(gold.size()) + " tags");
  }
  const auto first_pad = static_cast<std::size_t>(
      std::find(gold.begin(), gold.end(), TagLabel::kPad) - gold.begin());
  if (std::any_of(gold.begin() + static_cast<std::ptrdiff_t>(first_pad), gold.end(),
                  [](TagLabel t) { return t != TagLabel::kPad; })) {
    throw UsageError("PAD tags may only appear at trailing padding positions");
  }
  LossContext ctx;
  ctx.kind = LossKind::kTag;
  ctx.token_ids.assign(token_ids.begin(), token_ids.begin() + static_cast<std::ptrdiff_t>(first_pad));
  ctx.gold.assign(gold.begin(), gold.begin() + static_cast<std::ptrdiff_t>(first_pad));
  ctx.trace = bilstm_trace(encoder, embed(ctx.token_ids));
  ctx.tag_probs = tag_forward(tag_head, ctx.trace.outputs);
  ctx.loss = sequence_loss(ctx.tag_probs, ctx.gold);
  return ctx;
}

void Model::backward(const LossContext& ctx, double scale) {
  if (ctx.kind == LossKind::kNone || ctx.trace.outputs.empty()) {
    throw UsageError("backward called without a recorded forward pass");
  }
  const std::size_t n = ctx.trace.outputs.size();
  std::vector<Vector> d_outputs;

  if (ctx.kind == LossKind::kDrug) {
    Vector d_logits = ctx.drug_probs;
    d_logits[ctx.drug_target] -= 1.0;
    for (double& v : d_logits) v *= scale;
    Vector d_pooled = drug_head.backward(ctx.pooled, d_logits);
    if (config_.pooling == PoolingMode::kMean) {
      for (double& v : d_pooled) v /= static_cast<double>(n);
    }
    d_outputs.assign(n, d_pooled);
  } else {
    d_outputs.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
      Vector d_logits = ctx.tag_probs[t];
      d_logits[static_cast<std::size_t>(tag_index(ctx.gold[t]))] -= 1.0;
      for (double& v : d_logits) v *= scale;
      d_outputs[t] = tag_head.backward(ctx.trace.outputs[t], d_logits);
    }
  }

  auto dx = bilstm_backward(encoder, ctx.trace, d_outputs);
  if (config_.train_embeddings) {
    for (std::size_t t = 0; t < n; ++t) {
      auto row = embeddings.grad.row(static_cast<std::size_t>(ctx.token_ids[t]));
      for (std::size_t i = 0; i < row.size(); ++i) row[i] += dx[t][i];
    }
  }
}

}  // namespace adr
