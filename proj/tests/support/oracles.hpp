// SPDX-License-Identifier: Apache-2.0
// Brute-force references and fixtures shared by the unit and acceptance
// suites. Each checker returns a mismatch count so either harness can assert.
#pragma once

#include <algorithm>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "lingogap/corpus.hpp"
#include "lingogap/evalkit.hpp"
#include "lingogap/objective.hpp"
#include "lingogap/prompts.hpp"
#include "lingogap/providers.hpp"
#include "lingogap/text.hpp"
#include "support/testing.hpp"

namespace lingogap::testing {

// ------------------------------------------------------------ objective ---

constexpr std::size_t kBatchVocab = 13;

inline DirectionalBatch random_batch(std::mt19937_64 &rng, std::size_t len) {
  DirectionalBatch b;
  std::uniform_int_distribution<TokenId> tok(0, kBatchVocab - 1);
  Tokens gold_s(len), gold_t(len);
  for (auto &t : gold_s) t = tok(rng);
  for (auto &t : gold_t) t = tok(rng);
  for (Direction d : kDirections) {
    const Tokens &g = answer_is_source(d) ? gold_s : gold_t;
    std::vector<StepDistribution> steps;
    for (std::size_t i = 0; i < len; ++i)
      steps.push_back(random_step(rng, kBatchVocab, rng() % 2 == 0));
    b[d] = {SequenceDistribution(std::move(steps), g), g};
  }
  return b;
}

/// Total loss from the smoothed definitions, bypassing the library.
inline double oracle_total(const DirectionalBatch &b, double alpha, double beta, bool cross) {
  double kl_tt = 0, kl_ss = 0;
  for (std::size_t i = 0; i < b[Direction::st].dist.length(); ++i) {
    kl_tt += oracle_kl(b[Direction::st].dist.steps()[i].probs(),
                       b[Direction::tt].dist.steps()[i].probs());
    kl_ss += oracle_kl(b[Direction::ts].dist.steps()[i].probs(),
                       b[Direction::ss].dist.steps()[i].probs());
  }
  double ce = oracle_ce(b[Direction::ss].dist, b[Direction::ss].gold) +
              oracle_ce(b[Direction::tt].dist, b[Direction::tt].gold);
  if (cross)
    ce += oracle_ce(b[Direction::ts].dist, b[Direction::ts].gold) +
          oracle_ce(b[Direction::st].dist, b[Direction::st].gold);
  return ce + alpha * kl_tt + beta * kl_ss;
}

// ---------------------------------------------------------- text metrics ---

/// All 57 subsets of size <= 4 over six symbols, checked pairwise against
/// popcount arithmetic.
inline std::size_t jaccard_mismatches() {
  const char *alphabet[] = {"a", "b", "c", "d", "e", "f"};
  std::vector<unsigned> masks;
  for (unsigned m = 0; m < 64; ++m)
    if (__builtin_popcount(m) <= 4) masks.push_back(m);
  const auto to_set = [&](unsigned m) {
    TokenSet s;
    for (int i = 0; i < 6; ++i)
      if (m >> i & 1u) s.insert(alphabet[i]);
    return s;
  };
  std::size_t mismatches = 0;
  for (unsigned x : masks)
    for (unsigned y : masks) {
      const int inter = __builtin_popcount(x & y), uni = __builtin_popcount(x | y);
      const double want = uni == 0 ? 1.0 : static_cast<double>(inter) / uni;
      mismatches += jaccard(to_set(x), to_set(y)) != want;
    }
  return mismatches + (masks.size() != 57u);
}

/// Memoized recursive definition over suffixes.
inline std::size_t levenshtein_oracle(const std::string &a, const std::string &b) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
  std::function<std::size_t(std::size_t, std::size_t)> d = [&](std::size_t i, std::size_t j) {
    if (i == a.size()) return b.size() - j;
    if (j == b.size()) return a.size() - i;
    auto it = memo.find({i, j});
    if (it != memo.end()) return it->second;
    std::size_t best = std::min(d(i + 1, j), d(i, j + 1)) + 1;
    best = std::min(best, d(i + 1, j + 1) + (a[i] != b[j]));
    return memo[{i, j}] = best;
  };
  return d(0, 0);
}

/// Every ordered pair of the 364 strings of length <= 5 over {a, b, c}.
inline std::size_t edit_distance_mismatches() {
  std::vector<std::string> all{""};
  for (std::size_t begin = 0, len = 1; len <= 5; ++len) {
    const std::size_t end = all.size();
    for (std::size_t i = begin; i < end; ++i)
      for (char c : {'a', 'b', 'c'}) all.push_back(all[i] + c);
    begin = end;
  }
  std::size_t mismatches = all.size() != 364u;
  for (const auto &x : all)
    for (const auto &y : all) mismatches += edit_distance(x, y) != levenshtein_oracle(x, y);
  return mismatches;
}

// ------------------------------------------------------- funnel fixture ---

struct FixtureRow {
  const char *page;
  int confidence;
  const char *question;
  const char *answer;
  const char *reanswer;  ///< nullptr: reply that carries no record
  int judge;             ///< judge score if consulted
};

// Hand-computed funnel: 20 -> 16 (confidence) -> 14 (dedup) -> 10 (consistency).
inline const std::vector<FixtureRow> kFunnelFixture = {
    {"p1", 9, "alpha beta gamma delta epsilon zeta", "yes", "yes", 0},
    {"p1", 8, "alpha beta gamma delta epsilon eta", "yes", "yes", 0},  // Jaccard 5/7 vs #0
    {"p1", 7, "one two three four five six", "abcd", "abxy", 0},  // confidence 7 kept; edit 0.5
    {"p1", 6, "omega psi", "no", "no", 0},                         // confidence
    {"p1", 10, "kappa lambda mu nu xi", "no", "no", 0},
    {"p2", 8, "red orange yellow green blue", "blue sky", "blue sky.", 0},
    {"p2", 8, "red orange yellow green indigo", "x", "x", 0},  // tie on confidence, larger id
    {"p2", 5, "violet", "x", "x", 0},                          // confidence
    {"p2", 9, "cat dog", "mammals", "reptiles birds", 2},      // judge rejects
    {"p2", 7, "red s1 s2 s3 s4 s5", "yes", "yes", 0},          // Jaccard exactly 0.1 vs #5
    {"p3", 7, "ham spam", "ham", "completely different words", 7},  // judge boundary
    {"p3", 8, "eggs bacon", "eggs", "totally unrelated reply", 6},  // judge rejects
    {"p3", 9, "toast jam", "toast", nullptr, 0},                    // unparseable
    {"p3", 10, "tea coffee", "tea", "tea", 0},
    {"p3", 7, "milk sugar", "milk", "milk", 0},
    {"p4", 6, "north south", "x", "x", 0},  // confidence
    {"p4", 6, "east west", "x", "x", 0},    // confidence
    {"p4", 8, "up down", "up", "up", 0},
    {"p4", 8, "left right", "left", "wrong thing entirely", 3},  // judge rejects
    {"p4", 9, "in out", "in", "in", 0},
};

inline const std::set<std::string> kFunnelKept = {"f00", "f02", "f04", "f05", "f09",
                                                  "f10", "f13", "f14", "f17", "f19"};

inline std::vector<CandidateQAPair> fixture_pairs() {
  std::vector<CandidateQAPair> out;
  int i = 0;
  for (const FixtureRow &s : kFunnelFixture) {
    char id[16];
    std::snprintf(id, sizeof id, "f%02d", i++);
    out.push_back({id, s.question, s.answer, s.confidence, QType::extractive, s.page, "en"});
  }
  return out;
}

inline std::shared_ptr<ScriptedQaClient> fixture_qa() {
  using nlohmann::json;
  auto qa = std::make_shared<ScriptedQaClient>("unscripted");
  // Judge prompts carry the re-answer text, re-answer prompts do not.
  for (const FixtureRow &s : kFunnelFixture)
    if (s.judge > 0)
      qa->on(s.reanswer, json{{"question", s.question}, {"answer", "consistent"},
                              {"score", s.judge}}.dump());
  for (const FixtureRow &s : kFunnelFixture)
    qa->on(s.question, s.reanswer ? json{{"question", s.question}, {"answer", s.reanswer},
                                         {"confidence", 8}}.dump()
                                  : std::string("I cannot answer that."));
  return qa;
}

inline ProviderSuite fixture_providers(std::shared_ptr<ScriptedQaClient> qa) {
  ProviderSuite p;
  p.ocr = std::make_shared<MockOcrClient>(std::map<std::string, std::string>{
      {"p1", "page one"}, {"p2", "page two"}, {"p3", "page three"}, {"p4", "page four"}});
  p.qa = std::move(qa);
  return p;
}

inline PromptBundle bundled_prompts() {
  return PromptBundle::load(std::filesystem::path(LINGOGAP_TEST_DATA_DIR) / "prompts");
}

inline std::set<std::string> ids(const std::vector<CandidateQAPair> &v) {
  std::set<std::string> s;
  for (const auto &p : v) s.insert(p.id);
  return s;
}

// ------------------------------------------------------------ gap table ---

inline EvalResult random_result(std::mt19937_64 &rng, int i) {
  static const char *langs[] = {"srcL", "tgtL", "xx"};
  EvalResult r;
  r.sample_id = "r" + std::to_string(i);
  r.question_lang = langs[rng() % 3];
  r.answer_lang = langs[rng() % 2];
  r.qtype = static_cast<QType>(rng() % 3);
  r.correct = rng() % 3 != 0;
  r.f1 = r.correct ? 1.0 : static_cast<double>(rng() % 4) / 4.0;
  return r;
}

/// Compares every cell, overall row and gap of `t` to a direct aggregation of
/// `rs` with `ref` as the reference language. Exact equality throughout.
inline std::size_t gap_table_mismatches(const GapTable &t, const std::vector<EvalResult> &rs,
                                        const std::string &ref) {
  struct Cell {
    std::size_t n = 0, c = 0;
    double f1 = 0;
  };
  std::map<std::string, std::map<int, Cell>> brute;
  std::map<std::string, Cell> overall;
  for (const auto &r : rs)
    for (Cell *c : {&brute[r.question_lang][static_cast<int>(r.qtype)], &overall[r.question_lang]}) {
      ++c->n;
      c->c += r.correct;
      c->f1 += r.f1;
    }
  const auto acc = [](const Cell &c) { return static_cast<double>(c.c) / static_cast<double>(c.n); };
  std::size_t bad = t.rows.size() != overall.size();
  bad += t.rows.empty() || t.rows[0].lang != ref;
  for (const auto &row : t.rows) {
    bad += row.by_qtype.size() != brute[row.lang].size();
    for (const auto &[q, cell] : row.by_qtype) {
      const Cell &b = brute[row.lang][static_cast<int>(q)];
      bad += cell.n != b.n;
      bad += cell.correct != b.c;
      bad += cell.accuracy() != acc(b);
      bad += cell.f1() != b.f1 / static_cast<double>(b.n);
    }
    const Cell &o = overall[row.lang];
    bad += row.overall.n != o.n;
    bad += row.overall.correct != o.c;
    bad += row.overall.accuracy() != acc(o);
  }
  const double ref_acc = acc(overall[ref]);
  bad += t.gaps.size() + 1 != overall.size();
  for (const auto &g : t.gaps) {
    bad += g.absolute != ref_acc - acc(overall[g.lang]);
    bad += g.relative_pct != (ref_acc - acc(overall[g.lang])) / ref_acc * 100.0;
  }
  return bad;
}

}  // namespace lingogap::testing
