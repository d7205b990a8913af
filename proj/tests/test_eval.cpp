// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <random>

#include "adr/error.hpp"
#include "adr/eval.hpp"
#include "oracles.hpp"

using namespace adr;

namespace {
constexpr auto ADR = EntityLabel::kAdr;
constexpr auto IND = EntityLabel::kIndication;
}  // namespace

TEST_SUITE("eval") {

TEST_CASE("approximate_match examples") {
  std::vector<Span> pred{{1, 3, ADR}}, gold{{2, 6, ADR}};
  CHECK(approximate_match(pred, gold) == MatchCounts{1, 1, 1});

  pred = {{0, 1, ADR}};
  gold = {{5, 6, ADR}};
  CHECK(approximate_match(pred, gold).matched == 0);

  // "... weight gain": gold covers both tokens, prediction only "gain".
  pred = {{6, 7, ADR}};
  gold = {{5, 7, ADR}};
  CHECK(approximate_match(pred, gold) == MatchCounts{1, 1, 1});

  // Label must agree; indication spans are not counted by default.
  pred = {{2, 4, IND}};
  gold = {{2, 4, ADR}};
  CHECK(approximate_match(pred, gold) == MatchCounts{0, 0, 1});
  pred = {{2, 4, IND}};
  gold = {{2, 4, IND}};
  CHECK(approximate_match(pred, gold) == MatchCounts{0, 0, 0});
  CHECK(approximate_match(pred, gold, true) == MatchCounts{1, 1, 1});
}

TEST_CASE("one prediction matches at most one gold span") {
  std::vector<Span> pred{{0, 6, ADR}}, gold{{0, 2, ADR}, {3, 5, ADR}};
  CHECK(approximate_match(pred, gold) == MatchCounts{1, 1, 2});
  pred = {{0, 2, ADR}, {3, 5, ADR}};
  gold = {{0, 6, ADR}};
  CHECK(approximate_match(pred, gold) == MatchCounts{1, 2, 1});
}

TEST_CASE("approximate_match agrees with the brute-force checker") {
  std::mt19937_64 rng(2017);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t length = 1 + rng() % 30;
    auto pred = oracle::random_disjoint_spans(rng, length);
    auto gold = oracle::random_disjoint_spans(rng, length);
    std::shuffle(pred.begin(), pred.end(), rng);
    const bool ind = trial % 4 == 0;
    const MatchCounts got = approximate_match(pred, gold, ind);
    const MatchCounts want = oracle::brute_force_match(pred, gold, ind);
    REQUIRE(got == want);
    CHECK(got.matched == oracle::maximum_matching(pred, gold, ind));
    CHECK(got.matched <= got.predicted);
    CHECK(got.matched <= got.gold);
  }
}

TEST_CASE("adding predictions never lowers matched") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t length = 2 + rng() % 20;
    auto all = oracle::random_disjoint_spans(rng, length);
    auto gold = oracle::random_disjoint_spans(rng, length);
    std::vector<Span> pred;
    std::size_t previous = 0;
    for (const Span& s : all) {
      pred.push_back(s);
      const std::size_t m = approximate_match(pred, gold).matched;
      CHECK(m >= previous);
      previous = m;
    }
  }
}

TEST_CASE("a spurious prediction lowers precision") {
  std::vector<Span> gold{{0, 2, ADR}, {5, 7, ADR}};
  std::vector<Span> pred{{1, 2, ADR}};
  const double before = prf(approximate_match(pred, gold)).precision;
  pred.push_back({10, 12, ADR});
  const double after = prf(approximate_match(pred, gold)).precision;
  CHECK(after < before);
}

TEST_CASE("scores ignore span order and are perfect on identical lists") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t length = 1 + rng() % 25;
    auto pred = oracle::random_disjoint_spans(rng, length);
    auto gold = oracle::random_disjoint_spans(rng, length);
    const MatchCounts base = approximate_match(pred, gold);
    std::shuffle(pred.begin(), pred.end(), rng);
    std::shuffle(gold.begin(), gold.end(), rng);
    CHECK(approximate_match(pred, gold) == base);

    const MatchCounts self = approximate_match(gold, gold);
    if (self.gold > 0) {
      const Scores s = prf(self);
      CHECK(s.precision == 1.0);
      CHECK(s.recall == 1.0);
      CHECK(s.f1 == 1.0);
    }
  }
}

TEST_CASE("prf") {
  const Scores s = prf({3, 4, 5});
  CHECK(std::abs(s.precision - 0.75) < 1e-9);
  CHECK(std::abs(s.recall - 0.6) < 1e-9);
  CHECK(std::abs(s.f1 - 2.0 * 0.45 / 1.35) < 1e-9);
  CHECK(std::abs(s.f1 - 0.6666666667) < 1e-9);

  const Scores none = prf({0, 0, 5});
  CHECK(none.precision == 0.0);
  CHECK(none.f1 == 0.0);
  const Scores empty = prf({0, 0, 0});
  CHECK(empty.f1 == 0.0);
  const Scores all = prf({4, 4, 4});
  CHECK(all.precision == 1.0);
  CHECK(all.recall == 1.0);
  CHECK(all.f1 == 1.0);
}

TEST_CASE("aggregate_trials") {
  std::vector<Scores> same(3, Scores{0.5, 0.4, 0.44});
  auto r = aggregate_trials(same);
  CHECK(r.f1.mean == doctest::Approx(0.44));
  CHECK(r.f1.std == 0.0);

  std::vector<Scores> two{{0.7, 0.7, 0.7}, {0.8, 0.8, 0.8}};
  r = aggregate_trials(two);
  CHECK(r.f1.mean == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(r.f1.std == doctest::Approx(0.0707106781186548).epsilon(1e-12));

  std::vector<Scores> one{{0.3, 0.6, 0.4}};
  r = aggregate_trials(one);
  CHECK(r.recall.mean == 0.6);
  CHECK(r.recall.std == 0.0);

  CHECK_THROWS_AS(aggregate_trials(std::vector<Scores>{}), UsageError);
}

TEST_CASE("report text has per-trial rows and a summary row") {
  std::vector<Scores> trials{{0.5, 0.5, 0.5}, {0.7, 0.5, 0.5833333}};
  std::vector<std::uint64_t> seeds{1, 2};
  const std::string text = aggregate_trials(trials, seeds).to_text();
  CHECK(text.find("trial\tseed\tf1\tprecision\trecall") == 0);
  CHECK(text.find("\n1\t2\t0.5833\t0.7000\t0.5000\n") != std::string::npos);
  CHECK(text.find("mean ± std\t-\t") != std::string::npos);
}

}
