// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <map>
#include <random>
#include <set>

#include <json.hpp>

#include "lingogap/corpus.hpp"
#include "lingogap/record.hpp"
#include "support/oracles.hpp"
#include "support/testing.hpp"

namespace lingogap {
namespace {

using nlohmann::json;
using testing::bundled_prompts;

// ---------------------------------------------------------------- text ----

TEST(Jaccard, ExhaustiveAgainstBitmaskOracle) { EXPECT_EQ(testing::jaccard_mismatches(), 0u); }

TEST(EditDistance, ExhaustiveAgainstRecursiveOracle) {
  EXPECT_EQ(testing::edit_distance_mismatches(), 0u);
}

TEST(EditDistance, CountsCodePoints) {
  EXPECT_EQ(edit_distance("\xe4\xb8\xad\xe6\x96\x87", "\xe4\xb8\xad"), 1u);
  EXPECT_EQ(utf8_decode("a\xff").size(), 2u);
  EXPECT_EQ(utf8_decode("a\xff")[1], U'�');
}

TEST(EditDistance, Normalized) {
  EXPECT_EQ(normalized_edit_distance("", ""), 0.0);
  EXPECT_EQ(normalized_edit_distance("abcd", "abxy"), 0.5);
  EXPECT_EQ(normalized_edit_distance("a", ""), 1.0);
}

TEST(Tokens, LowercaseWhitespaceSplit) {
  EXPECT_EQ(word_tokens("  The  cat\tSAT\n"), (std::vector<std::string>{"the", "cat", "sat"}));
  EXPECT_EQ(token_set("a A b"), (TokenSet{"a", "b"}));
}

// ----------------------------------------------------------- providers ----

TEST(Providers, ScriptedQaFirstMatchWinsAndFailures) {
  ScriptedQaClient qa("fallback");
  qa.on("alpha", "A").on("alp", "B");
  EXPECT_EQ(qa.complete("xx alpha"), "A");
  EXPECT_EQ(qa.complete("zzz"), "fallback");
  qa.fail_on("boom");
  EXPECT_THROW(qa.complete("boom"), ProviderError);
  qa.clear_failures();
  EXPECT_EQ(qa.complete("boom"), "fallback");
  EXPECT_EQ(qa.calls(), 4u);
}

TEST(Providers, MockOcrUnknownPage) {
  MockOcrClient ocr(std::map<std::string, std::string>{{"p", "text"}});
  EXPECT_EQ(ocr.page_text("p"), "text");
  EXPECT_THROW(ocr.page_text("q"), ProviderError);
}

TEST(Providers, DictionaryTranslationBothWays) {
  DictionaryTranslationClient d(LanguageTag("en"), LanguageTag("de"), {{"cat", "katze"}});
  EXPECT_EQ(d.translate("the cat", LanguageTag("en"), LanguageTag("de")), "the katze");
  EXPECT_EQ(d.translate("katze", LanguageTag("de"), LanguageTag("en")), "cat");
}

TEST(Providers, EmbeddingsAreUnitNorm) {
  HashEmbeddingClient h(32, 1);
  EXPECT_NEAR(cosine(h.embed("x"), h.embed("x")), 1.0, 1e-12);
  EXPECT_EQ(h.embed("x"), h.embed("x"));
  OneHotEmbeddingClient o(2);
  EXPECT_EQ(cosine(o.embed("a"), o.embed("b")), 0.0);
  EXPECT_THROW(o.embed("c"), ProviderError);
  FixedEmbeddingClient f({{"u", {3.0, 4.0}}});
  EXPECT_NEAR(f.embed("u")[0], 0.6, 1e-15);
  EXPECT_THROW(f.embed("v"), ProviderError);
}

// ------------------------------------------------------------- prompts ----

TEST(Prompts, BundleHasEveryTemplate) {
  const PromptBundle b = bundled_prompts();
  for (const char *lang : {"en", "zh"}) {
    for (const char *q : {"yesno", "extractive", "abstractive"}) {
      EXPECT_TRUE(b.has(std::string("generate_") + q + "_" + lang));
      EXPECT_TRUE(b.has(std::string("reanswer_") + q + "_" + lang));
    }
    EXPECT_TRUE(b.has(std::string("consistency_") + lang));
  }
  EXPECT_EQ(b.names().size(), 14u);
  EXPECT_THROW(b.get("generate_yesno_fr"), ConfigError);
}

TEST(Prompts, SlotsAreFilled) {
  const PromptBundle b = bundled_prompts();
  const std::string g = b.generation_prompt(QType::extractive, "en", "PAGE-TEXT");
  EXPECT_NE(g.find("PAGE-TEXT"), std::string::npos);
  EXPECT_EQ(g.find(kContentSlot), std::string::npos);
  const std::string r = b.reanswer_prompt(QType::yesno, "zh", "PAGE", "QUESTION?");
  EXPECT_EQ(r.find(kQuestionSlot), std::string::npos);
  EXPECT_NE(r.find("QUESTION?"), std::string::npos);
  const std::string c = b.consistency_prompt("en", "Q", "ANS-ONE", 9, "ANS-TWO", 4);
  EXPECT_EQ(c.find(kAnswerSlot), std::string::npos);
  EXPECT_EQ(c.find(kConfidenceSlot), std::string::npos);
  EXPECT_LT(c.find("ANS-ONE"), c.find("ANS-TWO"));
}

TEST(Prompts, FillErrors) {
  EXPECT_THROW(fill_all("no slot", kContentSlot, "x"), ConfigError);
  EXPECT_THROW(fill_in_order("<a> <a>", "<a>", {"1"}), ConfigError);
  EXPECT_EQ(fill_in_order("<a> <a>", "<a>", {"1", "2"}), "1 2");
}

// ----------------------------------------------------------- generation ---

TEST(BraceSegments, IgnoresBracesInsideStrings) {
  const auto s = brace_segments(R"(x {"a": "}{"} y {"b": {"c": 1}} {"torn")");
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0], R"({"a": "}{"})");
  EXPECT_EQ(s[1], R"({"b": {"c": 1}})");
}

TEST(Generation, ParsesValidRecordsAndQuarantinesTheRest) {
  const PromptBundle b = bundled_prompts();
  ScriptedQaClient qa(
      R"({"question": "Is it?", "answer": true, "confidence": 8} noise )"
      R"({"question": "Which?", "answer": "that", "confidence": "9"} )"
      R"({"question": "Bad", "answer": "x", "confidence": 11} {oops})");
  const auto r = generate_candidates("pg", "content", QType::yesno, "en", qa, b);
  ASSERT_EQ(r.pairs.size(), 2u);
  EXPECT_EQ(r.pairs[0].id, "pg/yesno/en/0");
  EXPECT_EQ(r.pairs[0].answer, "yes");
  EXPECT_EQ(r.pairs[1].confidence, 9);
  EXPECT_EQ(r.quarantined.size(), 2u);
  EXPECT_EQ(r.quarantined[1].raw, "{oops}");
  EXPECT_EQ(r.warnings.size(), 1u);
  ScriptedQaClient empty("no json at all");
  EXPECT_EQ(generate_candidates("pg", "c", QType::yesno, "en", empty, b).quarantined.size(), 1u);
}

TEST(PairRecords, RoundTrip) {
  testing::TempDir dir("pairs");
  CandidateQAPair p{"id\"1", "q \xe4\xb8\xad", "a", 7, QType::abstractive, "page", "zh"};
  EXPECT_EQ(deserialize_pair(serialize_pair(p)), p);
  write_pairs(dir / "p.jsonl", {p, p});
  EXPECT_EQ(read_pairs(dir / "p.jsonl").size(), 2u);
  p.confidence = 0;
  EXPECT_THROW(p.validate(), InvariantError);
}

// ------------------------------------------------------- funnel fixture ---

using testing::fixture_pairs;
using testing::fixture_providers;
using testing::fixture_qa;
using testing::ids;

const std::set<std::string> &kExpectedKept = testing::kFunnelKept;

TEST(FilterChain, FunnelFixtureHandComputedStats) {
  const auto r = run_filter_chain(fixture_pairs(), {}, fixture_providers(fixture_qa()),
                                  bundled_prompts());
  EXPECT_EQ(r.stats.origin, 20u);
  EXPECT_EQ(r.stats.post_confidence, 16u);
  EXPECT_EQ(r.stats.post_similarity, 14u);
  EXPECT_EQ(r.stats.post_consistency, 10u);
  EXPECT_EQ(r.stats.final_count, 10u);
  EXPECT_TRUE(r.stats.monotone());
  EXPECT_EQ(ids(r.kept), kExpectedKept);
  std::map<std::string, ConsistencyDecision> by_id;
  for (const auto &d : r.decisions) by_id[d.pair_id] = d;
  EXPECT_EQ(by_id.at("f02").normalized_edit, 0.5);
  EXPECT_FALSE(by_id.at("f02").judge_score);
  EXPECT_EQ(by_id.at("f10").judge_score, 7);
  EXPECT_FALSE(by_id.at("f12").kept);
  EXPECT_EQ(r.decisions.size(), 14u);
}

TEST(FilterChain, PropertyPermutationInvariantKeptSet) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 10; ++i) {
    auto pairs = fixture_pairs();
    std::shuffle(pairs.begin(), pairs.end(), rng);
    const auto r = run_filter_chain(pairs, {}, fixture_providers(fixture_qa()), bundled_prompts());
    EXPECT_EQ(ids(r.kept), kExpectedKept);
    for (std::size_t k = 1; k < r.kept.size(); ++k) {
      const auto pos = [&](const std::string &id) {
        return std::find_if(pairs.begin(), pairs.end(), [&](auto &p) { return p.id == id; });
      };
      EXPECT_LT(pos(r.kept[k - 1].id), pos(r.kept[k].id));  // input order
    }
  }
}

TEST(FilterChain, PropertyMonotoneOnRandomInputs) {
  std::mt19937_64 rng(8);
  const char *words[] = {"a", "b", "c", "d", "e", "f", "g", "h"};
  for (int t = 0; t < 30; ++t) {
    std::vector<CandidateQAPair> pairs;
    const int n = static_cast<int>(rng() % 25);
    for (int i = 0; i < n; ++i) {
      std::string q;
      for (int w = 0; w < 1 + static_cast<int>(rng() % 4); ++w) q += std::string(words[rng() % 8]) + " ";
      pairs.push_back({"r" + std::to_string(i), q, "ans", 1 + static_cast<int>(rng() % 10),
                       QType::yesno, "p" + std::to_string(rng() % 3), "en"});
    }
    auto qa = std::make_shared<ScriptedQaClient>(rng() % 2 ? R"({"question":"q","answer":"ans","confidence":5})"
                                                           : R"({"question":"q","answer":"zzzzzz","confidence":5,"score":8})");
    ProviderSuite p;
    p.ocr = std::make_shared<MockOcrClient>(std::map<std::string, std::string>{
        {"p0", ""}, {"p1", ""}, {"p2", ""}});
    p.qa = qa;
    FilterThresholds th;
    th.dedup_scope = t % 2 ? DedupScope::global : DedupScope::per_page;
    const auto r = run_filter_chain(pairs, th, p, bundled_prompts());
    EXPECT_TRUE(r.stats.monotone());
    EXPECT_EQ(r.stats.origin, pairs.size());
    EXPECT_EQ(r.kept.size(), r.stats.final_count);
  }
}

TEST(FilterChain, GlobalScopeDedupsAcrossPages) {
  std::vector<CandidateQAPair> pairs = {{"a", "same words here", "x", 9, QType::yesno, "p1", "en"},
                                        {"b", "same words here", "x", 9, QType::yesno, "p2", "en"}};
  auto qa = std::make_shared<ScriptedQaClient>(R"({"question":"q","answer":"x","confidence":9})");
  ProviderSuite p;
  p.ocr = std::make_shared<MockOcrClient>(std::map<std::string, std::string>{{"p1", ""}, {"p2", ""}});
  p.qa = qa;
  EXPECT_EQ(run_filter_chain(pairs, {}, p, bundled_prompts()).stats.post_similarity, 2u);
  FilterThresholds g;
  g.dedup_scope = DedupScope::global;
  const auto r = run_filter_chain(pairs, g, p, bundled_prompts());
  EXPECT_EQ(r.stats.post_similarity, 1u);
  EXPECT_EQ(r.kept.front().id, "a");
}

TEST(FilterChain, RejectsDuplicateIdsAndBadThresholds) {
  auto pairs = fixture_pairs();
  pairs.push_back(pairs.front());
  EXPECT_THROW(run_filter_chain(pairs, {}, fixture_providers(fixture_qa()), bundled_prompts()),
               ConfigError);
  FilterThresholds t;
  t.max_jaccard = 2.0;
  EXPECT_THROW(t.validate(), ConfigError);
}

TEST(FilterChain, ResumableAfterStageError) {
  testing::TempDir dir("resume");
  const auto ckpt = dir / "consistency.jsonl";
  const auto uninterrupted =
      run_filter_chain(fixture_pairs(), {}, fixture_providers(fixture_qa()), bundled_prompts());

  auto qa = fixture_qa();
  qa->fail_on("tea coffee");
  try {
    run_filter_chain(fixture_pairs(), {}, fixture_providers(qa), bundled_prompts(), ckpt);
    FAIL() << "expected a stage error";
  } catch (const StageError &e) {
    EXPECT_EQ(e.pair_id(), "f13");
  }
  const std::size_t decided = read_lines(ckpt).size();
  EXPECT_GT(decided, 0u);
  EXPECT_LT(decided, 14u);

  qa->clear_failures();
  const std::size_t calls_before = qa->calls();
  const auto resumed =
      run_filter_chain(fixture_pairs(), {}, fixture_providers(qa), bundled_prompts(), ckpt);
  EXPECT_EQ(ids(resumed.kept), ids(uninterrupted.kept));
  EXPECT_EQ(resumed.stats, uninterrupted.stats);
  EXPECT_EQ(read_lines(ckpt).size(), 14u);
  // Earlier verdicts are reused, not re-asked.
  EXPECT_LT(qa->calls() - calls_before, uninterrupted.decisions.size() + 4);

  // A torn final line from a crash mid-write is tolerated.
  std::string text = read_text_file(ckpt);
  write_text_file(ckpt, text + "{\"v\":1,\"pair_id\":\"f1");
  const auto again =
      run_filter_chain(fixture_pairs(), {}, fixture_providers(fixture_qa()), bundled_prompts(), ckpt);
  EXPECT_EQ(again.stats, uninterrupted.stats);
}

TEST(FilterChain, OcrFailureIsStageErrorWithPairId) {
  ProviderSuite p = fixture_providers(fixture_qa());
  p.ocr = std::make_shared<MockOcrClient>(std::map<std::string, std::string>{});
  try {
    run_filter_chain(fixture_pairs(), {}, p, bundled_prompts());
    FAIL();
  } catch (const StageError &e) {
    EXPECT_FALSE(e.pair_id().empty());
  }
}

// --------------------------------------------------------- translation ----

TEST(Backtranslation, ScoreDefinition) {
  FixedEmbeddingClient e({{"a", {1, 0}}, {"b", {0, 1}}, {"c", {1, 1}}});
  // best cosines: a -> 1 (a), b -> 1/sqrt2 (c)
  EXPECT_NEAR(backtranslation_score({"a", "b"}, {"a", "c"}, e), (1 + 1 / std::sqrt(2.0)) / 2, 1e-12);
  EXPECT_EQ(backtranslation_score({"a"}, {}, e), 0.0);
  EXPECT_THROW(backtranslation_score({}, {"a"}, e), DomainError);
}

TEST(Backtranslation, GateAcceptsFaithfulAndQueuesDrift) {
  IdentityTranslationClient id;
  ScramblingTranslationClient scramble(3);
  OneHotEmbeddingClient emb;
  const LanguageTag en("en"), de("de");
  const auto ok = extend_multilingual("what is the yield", en, de, id, emb);
  EXPECT_TRUE(ok.accepted);
  EXPECT_EQ(ok.score, 1.0);
  const auto bad = extend_multilingual("what is the yield", en, de, scramble, emb);
  EXPECT_FALSE(bad.accepted);
  EXPECT_EQ(bad.score, 0.0);
  const json rec = json::parse(bad.review_record(en, de));
  EXPECT_EQ(rec.at("original"), "what is the yield");
  EXPECT_FALSE(rec.at("accepted").get<bool>());
}

TEST(Backtranslation, ThresholdBoundaryIsInclusive) {
  FixedEmbeddingClient e({{"a", {1, 0}}, {"b", {0, 1}}});
  DictionaryTranslationClient d(LanguageTag("en"), LanguageTag("de"), {{"a", "x"}, {"b", "y"}});
  const auto out = extend_multilingual("a b", LanguageTag("en"), LanguageTag("de"), d, e, 1.0);
  EXPECT_EQ(out.score, 1.0);
  EXPECT_TRUE(out.accepted);
}

}  // namespace
}  // namespace lingogap
