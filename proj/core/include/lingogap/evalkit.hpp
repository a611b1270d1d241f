// SPDX-License-Identifier: Apache-2.0
/**
 * @file   evalkit.hpp
 * @brief  Answer normalization, token F1, gap tables and entropy / mutual
 *         information reports.
 */
#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lingogap/infotheory.hpp"
#include "lingogap/synthtask.hpp"
#include "lingogap/toymodel.hpp"
#include "lingogap/types.hpp"

namespace lingogap {

/// Maps a token into a language; nullopt when the token has no image there.
class Translator {
 public:
  virtual ~Translator() = default;
  virtual std::optional<TokenId> to_language(TokenId t,
                                             const LanguageTag &lang) const = 0;
};

class LexiconTranslator : public Translator {
 public:
  explicit LexiconTranslator(const BilingualLexicon &lex) : lex_(lex) {}
  std::optional<TokenId> to_language(TokenId t,
                                     const LanguageTag &lang) const override;

 private:
  const BilingualLexicon &lex_;
};

struct NormalizedAnswer {
  Tokens tokens;
  bool warning = false;  ///< some token passed through untranslated
};

NormalizedAnswer normalize_answer(const Tokens &pred,
                                  const LanguageTag &target_lang,
                                  const Translator &translator);

/// Harmonic mean of multiset precision and recall. Both empty: 1.
double token_f1(const Tokens &pred, const Tokens &gold);

struct EvalResult {
  std::string sample_id;
  Tokens predicted;
  Tokens normalized;
  bool correct = false;
  double f1 = 0.0;
  std::string question_lang;
  std::string answer_lang;
  QType qtype = QType::extractive;
  bool normalization_warning = false;
};

/// Greedy answers for every sample, scored after normalizing prediction and
/// gold into `reference_lang`. Results keep the sample order.
std::vector<EvalResult> evaluate_model(const std::vector<VQASample> &samples,
                                       const ToyModel &model,
                                       const ModelState &state,
                                       const Translator &translator,
                                       const LanguageTag &reference_lang,
                                       int workers = 1);

std::string serialize_eval_result(const EvalResult &r);

/// Accuracy per (question language, answer language) on the synthetic task.
struct DirectionAccuracy {
  std::array<double, 4> acc{};  ///< indexed by Direction
  std::size_t samples = 0;

  double mono() const;   ///< mean over source-question directions
  double cross() const;  ///< mean over target-question directions
  double gap() const { return mono() - cross(); }
};

DirectionAccuracy direction_accuracy(const std::vector<EvalResult> &results);

struct GapCell {
  std::size_t n = 0;
  std::size_t correct = 0;
  double f1_sum = 0.0;

  double accuracy() const;
  double f1() const;
};

struct GapRow {
  std::string lang;
  std::map<QType, GapCell> by_qtype;
  GapCell overall;
};

struct GapEntry {
  std::string lang;
  double absolute = 0.0;      ///< acc_ref - acc_lang
  double relative_pct = 0.0;  ///< (acc_ref - acc_lang) / acc_ref * 100
};

struct GapTable {
  std::string reference_lang;
  std::vector<GapRow> rows;  ///< reference first, then sorted by tag
  std::vector<GapEntry> gaps;
  std::vector<std::string> warnings;

  const GapRow *row(const std::string &lang) const;
  std::string to_tsv() const;
};

/// `expected_langs` lists languages that should appear; absent ones are
/// reported in `warnings`.
GapTable gap_table(const std::vector<EvalResult> &results,
                   const std::string &reference_lang,
                   const std::vector<std::string> &expected_langs = {});

/// Default unconditional baseline: mu 0, sigma 5x the glyph-embedding stddev.
NoiseSpec default_noise_spec(const ToyModel &model, const ModelState &state,
                             std::uint64_t seed, double sigma_multiplier = 5.0);

/// Clean greedy answer gives h_cond; the same realized tokens teacher-forced
/// on noise-augmented visual tokens give h_uncond. Each sample draws its own
/// noise from `noise.seed` mixed with a hash of the sample id.
std::vector<MIReport> analyze_mi(const std::vector<VQASample> &samples,
                                 const ToyModel &model, const ModelState &state,
                                 const Translator &translator,
                                 const LanguageTag &reference_lang,
                                 const NoiseSpec &noise, int workers = 1);

struct EntropyGroup {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;  ///< sample variance; 0 when n < 2
};

struct LanguageMISummary {
  std::string lang;
  std::size_t n = 0;
  std::size_t n_correct = 0;
  double accuracy = 0.0;
  EntropyGroup correct;    ///< per-token h_cond of correct answers
  EntropyGroup incorrect;  ///< per-token h_cond of incorrect answers
  std::optional<double> pooled_se;
  double mean_mi = 0.0;  ///< per-token
  double mean_h_cond = 0.0;
  double mean_h_uncond = 0.0;
  std::vector<std::size_t> hist_correct;
  std::vector<std::size_t> hist_incorrect;

  /// (incorrect.mean - correct.mean) / pooled_se.
  std::optional<double> separation() const;
};

struct MISummary {
  std::vector<LanguageMISummary> languages;  ///< sorted by tag
  std::vector<double> bin_edges;
  std::optional<double> correlation;  ///< Pearson(mean MI, accuracy)
  std::vector<std::string> warnings;

  const LanguageMISummary *language(const std::string &lang) const;
  std::string to_json() const;
};

MISummary mi_accuracy_report(const std::vector<MIReport> &reports,
                             std::size_t bins = 20);

double pearson(const std::vector<double> &x, const std::vector<double> &y);

struct EmittedPlots {
  std::vector<std::filesystem::path> plots;  ///< .svg, one per language + scatter
  std::vector<std::filesystem::path> data;   ///< .tsv backing each plot
  std::vector<std::string> warnings;
};

/// hist_<lang>.svg/.tsv per non-empty language and mi_vs_accuracy.svg/.tsv.
EmittedPlots emit_plots(const MISummary &summary,
                        const std::filesystem::path &dir);

}  // namespace lingogap
