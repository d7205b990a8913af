// SPDX-License-Identifier: Apache-2.0
//
// Approximate-match span scoring and multi-trial aggregation.
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "adr/encoding.hpp"

namespace adr {

struct MatchCounts {
  std::size_t matched = 0;
  std::size_t predicted = 0;
  std::size_t gold = 0;

  MatchCounts& operator+=(const MatchCounts& o) {
    matched += o.matched;
    predicted += o.predicted;
    gold += o.gold;
    return *this;
  }
  friend bool operator==(const MatchCounts&, const MatchCounts&) = default;
};

// A gold span is matched when an unused predicted span with the same label
// shares at least one token with it. Gold spans are visited left to right
// and take the leftmost available prediction, so every span takes part in
// at most one match. Only ADR spans are counted unless include_indication.
MatchCounts approximate_match(std::span<const Span> predicted, std::span<const Span> gold,
                              bool include_indication = false);

struct Scores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

Scores prf(const MatchCounts& counts);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

// Sample mean and (n-1) standard deviation; std is 0 for a single value.
MeanStd mean_std(std::span<const double> values);

struct EvalReport {
  std::vector<Scores> trials;
  std::vector<std::uint64_t> seeds;  // parallel to trials when known
  MeanStd precision;
  MeanStd recall;
  MeanStd f1;

  // Tab-separated rows: header, one row per trial, then "mean ± std".
  std::string to_text() const;
};

EvalReport aggregate_trials(std::span<const Scores> trials,
                            std::span<const std::uint64_t> seeds = {});

}  // namespace adr
