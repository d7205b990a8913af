// SPDX-License-Identifier: Apache-2.0
#include "adr/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "adr/error.hpp"

namespace adr {
namespace {

bool counted(const Span& s, bool include_indication) {
  return s.label == EntityLabel::kAdr || include_indication;
}

bool overlaps(const Span& a, const Span& b) { return a.start < b.end && b.start < a.end; }

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

MatchCounts approximate_match(std::span<const Span> predicted, std::span<const Span> gold,
                              bool include_indication) {
  MatchCounts counts;
  std::vector<const Span*> preds;
  for (const Span& p : predicted) {
    if (counted(p, include_indication)) preds.push_back(&p);
  }
  std::vector<const Span*> golds;
  for (const Span& g : gold) {
    if (counted(g, include_indication)) golds.push_back(&g);
  }
  auto by_start = [](const Span* a, const Span* b) {
    return a->start != b->start ? a->start < b->start : a->end < b->end;
  };
  std::sort(preds.begin(), preds.end(), by_start);
  std::sort(golds.begin(), golds.end(), by_start);

  counts.predicted = preds.size();
  counts.gold = golds.size();
  std::vector<bool> used(preds.size(), false);
  for (const Span* g : golds) {
    for (std::size_t i = 0; i < preds.size(); ++i) {
      if (used[i] || preds[i]->label != g->label || !overlaps(*preds[i], *g)) continue;
      used[i] = true;
      ++counts.matched;
      break;
    }
  }
  return counts;
}

Scores prf(const MatchCounts& counts) {
  Scores s;
  if (counts.predicted > 0) {
    s.precision = static_cast<double>(counts.matched) / static_cast<double>(counts.predicted);
  }
  if (counts.gold > 0) {
    s.recall = static_cast<double>(counts.matched) / static_cast<double>(counts.gold);
  }
  if (s.precision + s.recall > 0.0) {
    s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  }
  return s;
}

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) throw UsageError("mean_std of an empty list");
  MeanStd out;
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

EvalReport aggregate_trials(std::span<const Scores> trials, std::span<const std::uint64_t> seeds) {
  if (trials.empty()) throw UsageError("aggregate_trials needs at least one trial");
  if (!seeds.empty() && seeds.size() != trials.size()) {
    throw UsageError("aggregate_trials: seed list length differs from trial count");
  }
  EvalReport report;
  report.trials.assign(trials.begin(), trials.end());
  report.seeds.assign(seeds.begin(), seeds.end());
  std::vector<double> p, r, f;
  for (const Scores& s : trials) {
    p.push_back(s.precision);
    r.push_back(s.recall);
    f.push_back(s.f1);
  }
  report.precision = mean_std(p);
  report.recall = mean_std(r);
  report.f1 = mean_std(f);
  return report;
}

std::string EvalReport::to_text() const {
  std::string out = "trial\tseed\tf1\tprecision\trecall\n";
  for (std::size_t i = 0; i < trials.size(); ++i) {
    out += std::to_string(i) + '\t' + (seeds.empty() ? "-" : std::to_string(seeds[i])) + '\t' +
           fixed(trials[i].f1) + '\t' + fixed(trials[i].precision) + '\t' +
           fixed(trials[i].recall) + '\n';
  }
  auto cell = [](const MeanStd& m) { return fixed(m.mean) + " ± " + fixed(m.std); };
  out += "mean ± std\t-\t" + cell(f1) + '\t' + cell(precision) + '\t' + cell(recall) + '\n';
  return out;
}

}  // namespace adr
