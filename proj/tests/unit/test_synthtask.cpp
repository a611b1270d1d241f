// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <set>

#include "lingogap/hash.hpp"
#include "lingogap/record.hpp"
#include "lingogap/synthtask.hpp"
#include "support/testing.hpp"

namespace lingogap {
namespace {

class Synth : public ::testing::Test {
 protected:
  TaskSpec spec = testing::small_task();
  BilingualLexicon lex = BilingualLexicon::for_task(spec);
  DatasetSplits splits = generate_dataset(spec, lex);
};

TEST(TaskSpec, DefaultVocabularyLayout) {
  const TaskSpec s;
  EXPECT_EQ(s.source_vocab_size(), 40);
  EXPECT_EQ(s.glyph_vocab_size(), 41);
  EXPECT_EQ(s.vocab_size(), 84);
}

TEST(TaskSpec, InfeasibleGridIsConfigError) {
  TaskSpec s;
  s.grid_width = 2;
  s.grid_height = 2;
  s.facts_per_image = 4;
  EXPECT_THROW(s.validate(), ConfigError);
  TaskSpec t;
  t.facts_per_image = 20;
  EXPECT_THROW(t.validate(), ConfigError);
}

TEST(TaskSpec, JsonRoundTripAndUnknownKey) {
  TaskSpec s = testing::small_task(99);
  s.filler_prob = 0.125;
  const TaskSpec back = task_spec_from_json(task_spec_to_json(s));
  EXPECT_EQ(task_spec_to_json(back), task_spec_to_json(s));
  EXPECT_THROW(task_spec_from_json(R"({"num_keys": 4, "bogus": 1})"), DomainError);
}

TEST(Lexicon, IsABijectionBetweenDisjointRanges) {
  const TaskSpec s;
  const auto lex = BilingualLexicon::for_task(s);
  std::set<TokenId> src(lex.src_tokens().begin(), lex.src_tokens().end());
  std::set<TokenId> tgt;
  for (TokenId t : lex.src_tokens()) {
    const TokenId u = lex.to_tgt(t);
    EXPECT_TRUE(lex.is_tgt(u));
    EXPECT_FALSE(src.count(u));
    EXPECT_EQ(lex.to_src(u), t);
    tgt.insert(u);
  }
  EXPECT_EQ(tgt.size(), src.size());
  EXPECT_THROW(lex.to_tgt(kEosToken), DomainError);
  EXPECT_THROW(lex.map({4}, LanguageTag("xx")), DomainError);
}

TEST(Lexicon, JsonRoundTrip) {
  const TaskSpec s;
  const auto lex = BilingualLexicon::for_task(s);
  EXPECT_EQ(lexicon_from_json(lexicon_to_json(lex, s)), lex);
  EXPECT_THROW(BilingualLexicon(3, {0, 0, 1}), InvariantError);
}

TEST_F(Synth, SplitSizesAndDirections) {
  EXPECT_EQ(splits.train.size(), 4u * 120);
  EXPECT_EQ(splits.val.size(), 4u * 20);
  EXPECT_EQ(splits.test.size(), 4u * 40);
  EXPECT_EQ(group_by_image(splits.train).size(), 120u);
}

// Oracle reader: locate the asked key's glyph and read the cell to its right.
TEST_F(Synth, AnswersAreReadableFromTheImage) {
  const TaskVocabulary voc{spec};
  for (const auto *split : {&splits.train, &splits.val, &splits.test}) {
    for (const auto &s : *split) {
      TokenId key = s.question.back();
      if (lex.is_tgt(key)) key = lex.to_src(key);
      const int glyph = voc.glyph_of_source(key);
      int found = 0;
      TokenId value = -1;
      for (int r = 0; r < s.image.height(); ++r)
        for (int c = 0; c + 1 < s.image.width(); ++c)
          if (s.image.at(r, c) == glyph) {
            ++found;
            value = voc.source_of_glyph(s.image.at(r, c + 1));
          }
      ASSERT_EQ(found, 1) << s.id;
      const Tokens expect = lex.map({value}, s.answer_lang);
      EXPECT_EQ(s.gold_answer, expect) << s.id;
    }
  }
}

TEST_F(Synth, ImagesAreMonolingualSource) {
  for (const auto &s : splits.train)
    for (int g : s.image.cells())
      if (g != 0) {
        EXPECT_TRUE(lex.is_src(TaskVocabulary{spec}.source_of_glyph(g)));
      }
}

TEST_F(Synth, QuestionsAndAnswersAreInTheirLanguage) {
  for (const auto &s : splits.test) {
    const bool src_q = s.question_lang == source_lang();
    for (TokenId t : s.question) EXPECT_EQ(lex.is_src(t), src_q);
    for (TokenId t : s.gold_answer) EXPECT_EQ(lex.is_src(t), s.answer_lang == source_lang());
    EXPECT_EQ(s.question.size(), static_cast<std::size_t>(spec.template_len + 1));
  }
}

TEST_F(Synth, SplitsAreDisjointAtImageLevel) {
  std::set<std::vector<int>> seen;
  std::size_t images = 0;
  for (const auto *split : {&splits.train, &splits.val, &splits.test})
    for (const auto &g : group_by_image(*split)) {
      seen.insert((*split)[g.index[0]].image.cells());
      ++images;
    }
  EXPECT_EQ(seen.size(), images);
}

TEST_F(Synth, NormalizationNeverChangesCorrectness) {
  // A prediction is correct in tgt form iff its bijection image is correct in src form.
  for (std::size_t i = 0; i + 3 < splits.val.size(); i += 4) {
    const auto &ss = splits.val[i];
    const auto &st = splits.val[i + 1];
    for (TokenId pred : lex.src_tokens()) {
      const bool src_ok = Tokens{pred} == ss.gold_answer;
      const bool tgt_ok = Tokens{lex.to_tgt(pred)} == st.gold_answer;
      EXPECT_EQ(src_ok, tgt_ok);
    }
  }
}

TEST_F(Synth, DeterministicInSeed) {
  const auto again = generate_dataset(spec, lex);
  EXPECT_EQ(again.train, splits.train);
  EXPECT_EQ(again.test, splits.test);
  TaskSpec other = spec;
  other.seed = 8;
  EXPECT_NE(generate_dataset(other, lex).train, splits.train);
}

TEST_F(Synth, GroupByImageRejectsIncompleteGroups) {
  auto v = splits.val;
  v.pop_back();
  EXPECT_THROW(group_by_image(v), InvariantError);
  auto w = splits.val;
  w.push_back(w.front());
  EXPECT_THROW(group_by_image(w), InvariantError);
}

TEST(RenderQuestion, RejectsNonKeys) {
  const TaskSpec s;
  const auto lex = BilingualLexicon::for_task(s);
  EXPECT_THROW(render_question(kEosToken, source_lang(), lex, s), DomainError);
  const Tokens q = render_question(kNumSpecialTokens, target_lang(), lex, s);
  EXPECT_EQ(q.size(), 4u);
  EXPECT_EQ(q.back(), lex.to_tgt(kNumSpecialTokens));
}

TEST(BosFor, KnownLanguagesOnly) {
  EXPECT_EQ(bos_for(source_lang()), kBosSrcToken);
  EXPECT_EQ(bos_for(target_lang()), kBosTgtToken);
  EXPECT_THROW(bos_for(LanguageTag("xx")), DomainError);
}

}  // namespace
}  // namespace lingogap
