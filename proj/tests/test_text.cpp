// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "adr/error.hpp"
#include "adr/text.hpp"

using namespace adr;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name, const std::string& content) {
  fs::path p = fs::temp_directory_path() / ("adr_text_" + name);
  std::ofstream(p) << content;
  return p;
}

std::string random_tweet(std::mt19937_64& rng) {
  static const std::vector<std::string> pieces = {
      "@JonDoe", "@", "@@x", "@_a", "http://t.co/x", "HTTPS://A.b", "www.x.org", "#fun!",
      "hello", "HeLLo", "<USER>", "<LINK>", "<DRUG>", "<user>", "é", "\xF0\x9F\x98\x80",
      "!!!", "don't", "a.b", "(http://x)", "x\xC2\xA0y", "\t", "  ", "\n", "42", "_"};
  std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1);
  std::uniform_int_distribution<int> len(0, 8);
  std::string out;
  const int n = len(rng);
  for (int i = 0; i < n; ++i) {
    out += pieces[pick(rng)];
    if (rng() % 3) out += ' ';
  }
  return out;
}

}  // namespace

TEST_SUITE("text") {

TEST_CASE("normalize examples") {
  CHECK(normalize("@JonDoe check http://t.co/x #fun!") == "<USER> check <LINK> fun");
  CHECK(normalize("") == "");
  CHECK(normalize("h\xC3\xA9llo \xF0\x9F\x98\x80 world") == "hllo world");
  CHECK(normalize("Visit WWW.Example.com NOW") == "visit <LINK> now");
  CHECK(normalize("@ alone") == "alone");
  CHECK(normalize("  spaced\t\tout \n") == "spaced out");
  CHECK(normalize("keeps <DRUG> sentinel") == "keeps <DRUG> sentinel");
}

TEST_CASE("normalize is idempotent and leaves no raw urls, mentions or non-ascii") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 2000; ++i) {
    const std::string raw = random_tweet(rng);
    const std::string once = normalize(raw);
    CHECK(normalize(once) == once);
    for (unsigned char c : once) CHECK(c < 0x80);
    for (const auto& tok : tokenize(once)) {
      CHECK(tok.find("://") == std::string::npos);
      CHECK(tok[0] != '@');
    }
  }
}

TEST_CASE("tokenize") {
  CHECK(tokenize("a  b") == TokenList{"a", "b"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("<USER> ugh effexor") == TokenList{"<USER>", "ugh", "effexor"});
}

TEST_CASE("remove_stopwords") {
  StopwordSet sw{"i", "the"};
  TokenList in{"i", "hate", "the", "drug"};
  TokenList expected;
  std::copy_if(in.begin(), in.end(), std::back_inserter(expected),
               [&](const std::string& t) { return !sw.contains(t); });
  CHECK(remove_stopwords(in, sw) == expected);
  CHECK(remove_stopwords(TokenList{}, sw).empty());
  StopwordSet hostile{"<DRUG>", "<USER>"};
  CHECK(remove_stopwords(TokenList{"<DRUG>"}, hostile) == TokenList{"<DRUG>"});
}

TEST_CASE("stopword file") {
  auto p = temp_file("stop.txt", "# comment\nThe\n\n  a \n");
  StopwordSet sw = load_stopwords(p.string());
  CHECK(sw == StopwordSet{"the", "a"});
  CHECK_THROWS_AS(load_stopwords("/nonexistent/stop.txt"), UsageError);
}

TEST_CASE("bundled stopword list") {
  StopwordSet sw = load_stopwords(ADR_DATA_DIR "/stopwords_en.txt");
  CHECK(sw.size() >= 120);
  CHECK(sw.size() <= 200);
  CHECK(sw.contains("the"));
  CHECK(!sw.contains("pain"));
}

TEST_CASE("mask_drug") {
  DrugLexicon lex({"effexor", "cymbalta"});
  auto r = mask_drug({{"this", "effexor", "sucks"}, "t1"}, lex);
  REQUIRE(r.status == MaskStatus::kKept);
  CHECK(r.example->tweet.tokens == TokenList{"this", "<DRUG>", "sucks"});
  CHECK(lex.name(r.example->drug_label) == "effexor");
  CHECK(r.example->tweet.source_id == "t1");

  CHECK(mask_drug({{"cymbalta", "and", "effexor"}, "t2"}, lex).status == MaskStatus::kMultipleDrugs);
  CHECK(mask_drug({{"effexor", "effexor"}, "t3"}, lex).status == MaskStatus::kMultipleDrugs);
  CHECK(mask_drug({{"feeling", "fine"}, "t4"}, lex).status == MaskStatus::kNoDrug);

  auto upper = mask_drug({{"CYMBALTA", "again"}, "t5"}, lex);
  REQUIRE(upper.status == MaskStatus::kKept);
  CHECK(lex.name(upper.example->drug_label) == "cymbalta");

  auto unmasked = mask_drug({{"this", "effexor"}, "t6"}, lex, /*mask=*/false);
  REQUIRE(unmasked.status == MaskStatus::kKept);
  CHECK(unmasked.example->tweet.tokens == TokenList{"this", "effexor"});
}

TEST_CASE("masked output has one sentinel and no lexicon token") {
  DrugLexicon lex({"a1", "b2", "c3"});
  std::mt19937_64 rng(8);
  const std::vector<std::string> words = {"a1", "b2", "c3", "x", "y", "z", "w"};
  for (int i = 0; i < 500; ++i) {
    TokenizedTweet t;
    for (int k = 0; k < 1 + static_cast<int>(rng() % 6); ++k) t.tokens.push_back(words[rng() % words.size()]);
    auto r = mask_drug(t, lex);
    if (r.status != MaskStatus::kKept) continue;
    const auto& toks = r.example->tweet.tokens;
    CHECK(std::count(toks.begin(), toks.end(), "<DRUG>") == 1);
    for (const auto& tok : toks) CHECK(!lex.find(tok).has_value());
  }
}

TEST_CASE("build_vocabulary") {
  std::vector<TokenList> one{{"a", "a", "b"}};
  Vocabulary v = build_vocabulary(one, 1);
  CHECK(v.size() == kSentinelCount + 1);
  CHECK(v.contains("a"));
  CHECK(!v.contains("b"));
  CHECK(v.index("<PAD>") == 0);

  std::vector<TokenList> tie{{"b", "a"}};
  CHECK(build_vocabulary(tie, 1).contains("a"));

  std::vector<TokenList> all{{"x", "y"}, {"z"}};
  CHECK(build_vocabulary(all, 100).size() == kSentinelCount + 3);

  std::vector<TokenList> none{{}};
  CHECK_THROWS_AS(build_vocabulary(none, 10), UsageError);
  CHECK_THROWS_AS(build_vocabulary(all, 0), UsageError);

  CHECK(v.index("never-seen") == kUnkIndex);
}

TEST_CASE("build_vocabulary keeps the most frequent tokens") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<TokenList> corpora(2);
    std::map<std::string, int> freq;
    for (auto& stream : corpora) {
      for (int i = 0; i < 60; ++i) {
        std::string tok = "t" + std::to_string(rng() % 20);
        stream.push_back(tok);
        ++freq[tok];
      }
    }
    const std::size_t cap = 1 + rng() % 12;
    Vocabulary v = build_vocabulary(corpora, cap);
    CHECK(v.size() <= cap + kSentinelCount);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(v.index(v.token(i)) == static_cast<int>(i));
    int min_kept = 1 << 30, max_dropped = 0;
    for (auto& [tok, n] : freq) {
      if (v.contains(tok)) min_kept = std::min(min_kept, n);
      else max_dropped = std::max(max_dropped, n);
    }
    CHECK(min_kept >= max_dropped);
  }
}

TEST_CASE("vocabulary file round trip") {
  std::vector<TokenList> c{{"alpha", "beta", "beta"}};
  Vocabulary v = build_vocabulary(c, 10);
  auto p = fs::temp_directory_path() / "adr_vocab_rt.txt";
  v.save(p.string());
  CHECK(Vocabulary::load(p.string()) == v);
  auto bad = temp_file("bad_vocab.txt", "alpha\nbeta\n");
  CHECK_THROWS_AS(Vocabulary::load(bad.string()), DataError);
}

TEST_CASE("load_embeddings") {
  std::vector<TokenList> c{{"cat", "dog", "emu"}};
  Vocabulary v = build_vocabulary(c, 10);

  auto full = temp_file("emb_full.txt", "4 3\ncat 1 2 3\ndog 4 5 6\nemu 7 8 9\nyak 0 0 0\n");
  EmbeddingTable e = load_embeddings(full.string(), v, 1);
  CHECK(e.coverage == 1.0);
  CHECK(e.table.rows() == v.size());
  CHECK(e.dim() == 3);
  CHECK(e.row(v.index("dog"))[1] == 5.0);
  for (double x : e.row(kPadIndex)) CHECK(x == 0.0);

  auto partial = temp_file("emb_partial.txt", "1 3\ncat 1 2 3\n");
  EmbeddingTable p1 = load_embeddings(partial.string(), v, 42);
  EmbeddingTable p2 = load_embeddings(partial.string(), v, 42);
  CHECK(p1.coverage == doctest::Approx(1.0 / 3.0));
  for (double x : p1.row(v.index("emu"))) {
    CHECK(x >= -0.05);
    CHECK(x <= 0.05);
  }
  CHECK(p1.table == p2.table);
  EmbeddingTable p3 = load_embeddings(partial.string(), v, 43);
  CHECK(!(p1.table == p3.table));
  CHECK(p1.table.all_finite());

  auto short_line = temp_file("emb_short.txt", "2 3\ncat 1 2 3\ndog 4 5\n");
  try {
    load_embeddings(short_line.string(), v, 1);
    FAIL("expected format error");
  } catch (const DataError& err) {
    CHECK(std::string(err.what()).find(":3:") != std::string::npos);
  }
  auto garbage = temp_file("emb_garbage.txt", "1 2\ncat 1 two\n");
  CHECK_THROWS_WITH_AS(load_embeddings(garbage.string(), v, 1), doctest::Contains(":2:"), DataError);
  auto header = temp_file("emb_header.txt", "three 2\n");
  CHECK_THROWS_AS(load_embeddings(header.string(), v, 1), DataError);
  auto count = temp_file("emb_count.txt", "3 2\ncat 1 2\n");
  CHECK_THROWS_AS(load_embeddings(count.string(), v, 1), DataError);
  CHECK_THROWS_AS(load_embeddings("/nonexistent.txt", v, 1), UsageError);
}

}
