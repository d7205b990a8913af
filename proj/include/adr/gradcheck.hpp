// SPDX-License-Identifier: Apache-2.0
//
// Finite-difference verification of the model's hand-written backward pass
// on small random instances.
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "adr/model.hpp"

namespace adr {

struct GradcheckOptions {
  std::size_t embedding_dim = 5;
  std::size_t hidden_dim = 7;
  std::size_t length = 4;
  std::size_t drugs = 3;
  std::size_t seeds = 10;
  std::uint64_t first_seed = 1;
  double epsilon = 1e-5;
  double tolerance = 1e-4;
  // Gradients smaller than this are compared on an absolute scale.
  double magnitude_floor = 1e-5;
  bool gate_biases = true;
  bool train_embeddings = true;
  PoolingMode pooling = PoolingMode::kMean;

  void validate() const;
};

struct GradcheckEntry {
  std::uint64_t seed = 0;
  LossKind head = LossKind::kNone;
  std::string parameter;
  double max_relative_error = 0.0;
  bool passed = true;
};

struct GradcheckResult {
  std::vector<GradcheckEntry> entries;
  bool passed = true;
  double worst_error = 0.0;
  std::string worst_parameter;

  std::string summary() const;
};

// Runs after backward() and before the comparison; lets tests corrupt the
// analytic gradients to confirm the check catches it.
using GradientMutator = std::function<void(Model&, LossKind)>;

// Random tiny model for seed `seed`, with randomized biases.
Model make_gradcheck_model(const GradcheckOptions& options, std::uint64_t seed);

GradcheckResult run_gradcheck(const GradcheckOptions& options,
                              const GradientMutator& mutate = {});

}  // namespace adr
