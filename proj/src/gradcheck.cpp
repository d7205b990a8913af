// SPDX-License-Identifier: Apache-2.0
#include "adr/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "adr/error.hpp"

namespace adr {

void GradcheckOptions::validate() const {
  if (!(epsilon > 0.0)) throw UsageError("gradcheck epsilon must be > 0");
  if (!(tolerance > 0.0)) throw UsageError("gradcheck tolerance must be > 0");
  if (embedding_dim == 0 || hidden_dim == 0 || length == 0) {
    throw UsageError("gradcheck dimensions must be positive");
  }
  if (drugs < 2) throw UsageError("gradcheck needs at least 2 drugs");
  if (seeds == 0) throw UsageError("gradcheck needs at least one seed");
}

Model make_gradcheck_model(const GradcheckOptions& options, std::uint64_t seed) {
  std::vector<std::string> tokens(std::begin(kSentinels), std::end(kSentinels));
  for (int i = 0; i < 6; ++i) tokens.push_back("w" + std::to_string(i));
  Vocabulary vocab = Vocabulary::from_tokens(tokens);
  EmbeddingTable emb = random_embeddings(vocab, options.embedding_dim, seed ^ 0x5bd1e995ULL);
  // Push the embeddings away from the +-0.05 init so the gates leave their
  // linear regime.
  for (double& v : emb.table.values()) v *= 10.0;

  std::vector<std::string> drugs;
  for (std::size_t i = 0; i < options.drugs; ++i) drugs.push_back("drug" + std::to_string(i));

  ModelConfig config;
  config.embedding_dim = options.embedding_dim;
  config.hidden_dim = options.hidden_dim;
  config.drug_count = options.drugs;
  config.pooling = options.pooling;
  config.gate_biases = options.gate_biases;
  config.train_embeddings = options.train_embeddings;
  Model model(config, std::move(vocab), std::move(emb), std::move(drugs), seed);

  std::mt19937_64 rng(seed + 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  if (options.gate_biases) {
    for (LSTMCellParams* cell : {&model.encoder.forward_cell, &model.encoder.backward_cell}) {
      for (auto& b : cell->bias) {
        for (double& v : b.value.values()) v += dist(rng);
      }
    }
  }
  for (double& v : model.drug_head.bias.value.values()) v = dist(rng);
  for (double& v : model.tag_head.bias.value.values()) v = dist(rng);
  return model;
}

namespace {

std::vector<GradcheckEntry> check_head(Model& model, LossKind head, const std::vector<int>& ids,
                                       std::size_t drug_target, const TagSequence& gold,
                                       const GradcheckOptions& options,
                                       const GradientMutator& mutate, std::uint64_t seed) {
  auto forward = [&]() {
    return head == LossKind::kDrug ? model.drug_loss(ids, drug_target) : model.tag_loss(ids, gold);
  };

  model.zero_grad();
  model.backward(forward());
  if (mutate) mutate(model, head);

  std::vector<Parameter*> checked = model.encoder_parameters();
  auto head_params = head == LossKind::kDrug ? model.drug_head_parameters()
                                             : model.tag_head_parameters();
  auto other_params = head == LossKind::kDrug ? model.tag_head_parameters()
                                              : model.drug_head_parameters();
  checked.insert(checked.end(), head_params.begin(), head_params.end());

  std::vector<Matrix> analytic;
  for (Parameter* p : checked) analytic.push_back(p->grad);

  const auto numeric = finite_difference_gradient([&] { return forward().loss; }, checked,
                                                  options.epsilon);

  std::vector<GradcheckEntry> entries;
  for (std::size_t k = 0; k < checked.size(); ++k) {
    GradcheckEntry e{seed, head, checked[k]->name, 0.0, true};
    for (std::size_t i = 0; i < analytic[k].size(); ++i) {
      e.max_relative_error = std::max(
          e.max_relative_error,
          relative_error(analytic[k][i], numeric[k][i], options.magnitude_floor));
    }
    e.passed = e.max_relative_error < options.tolerance;
    entries.push_back(std::move(e));
  }
  // The other head does not enter this loss.
  for (Parameter* p : other_params) {
    GradcheckEntry e{seed, head, p->name, 0.0, true};
    for (double g : p->grad.values()) e.max_relative_error = std::max(e.max_relative_error, std::abs(g));
    e.passed = e.max_relative_error == 0.0;
    entries.push_back(std::move(e));
  }
  return entries;
}

}  // namespace

GradcheckResult run_gradcheck(const GradcheckOptions& options, const GradientMutator& mutate) {
  options.validate();
  GradcheckResult result;
  for (std::size_t s = 0; s < options.seeds; ++s) {
    const std::uint64_t seed = options.first_seed + s;
    Model model = make_gradcheck_model(options, seed);

    std::mt19937_64 rng(seed * 7919 + 17);
    std::uniform_int_distribution<int> token(1, static_cast<int>(model.vocab().size()) - 1);
    std::uniform_int_distribution<std::size_t> drug(0, options.drugs - 1);
    std::uniform_int_distribution<int> tag(0, 2);  // I-ADR, I-IND, O
    std::vector<int> ids(options.length);
    TagSequence gold(options.length);
    for (std::size_t t = 0; t < options.length; ++t) {
      ids[t] = token(rng);
      gold[t] = static_cast<TagLabel>(tag(rng));
    }
    const std::size_t target = drug(rng);

    for (LossKind head : {LossKind::kDrug, LossKind::kTag}) {
      auto entries = check_head(model, head, ids, target, gold, options, mutate, seed);
      result.entries.insert(result.entries.end(), entries.begin(), entries.end());
    }
  }
  for (const GradcheckEntry& e : result.entries) {
    if (!e.passed) result.passed = false;
    if (e.max_relative_error >= result.worst_error) {
      result.worst_error = e.max_relative_error;
      result.worst_parameter = e.parameter;
    }
  }
  return result;
}

std::string GradcheckResult::summary() const {
  std::ostringstream out;
  std::size_t failures = 0;
  for (const GradcheckEntry& e : entries) {
    if (e.passed) continue;
    ++failures;
    out << "FAIL seed=" << e.seed << " head=" << (e.head == LossKind::kDrug ? "drug" : "tag")
        << " param=" << e.parameter << " max_rel_err=" << e.max_relative_error << '\n';
  }
  out << (passed ? "PASS" : "FAIL") << ": " << entries.size() - failures << "/" << entries.size()
      << " parameter checks passed; worst relative error " << worst_error << " ("
      << worst_parameter << ")\n";
  return out.str();
}

}  // namespace adr
