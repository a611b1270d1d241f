// SPDX-License-Identifier: Apache-2.0
/**
 * @file   corpus.hpp
 * @brief  QA-pair generation, the confidence / similarity / consistency
 *         filter chain and back-translation gating.
 */
#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lingogap/prompts.hpp"
#include "lingogap/providers.hpp"
#include "lingogap/text.hpp"
#include "lingogap/types.hpp"

namespace lingogap {

struct CandidateQAPair {
  std::string id;
  std::string question;
  std::string answer;
  int confidence = 10;  ///< self-rated, 1..10
  QType qtype = QType::extractive;
  std::string source_page_id;
  std::string lang;

  void validate() const;
  bool operator==(const CandidateQAPair &) const = default;
};

std::string serialize_pair(const CandidateQAPair &p);
CandidateQAPair deserialize_pair(std::string_view line);
std::vector<CandidateQAPair> read_pairs(const std::filesystem::path &path);
void write_pairs(const std::filesystem::path &path,
                 const std::vector<CandidateQAPair> &pairs);

/// A response segment that did not parse into a valid pair.
struct QuarantineRecord {
  std::string source_page_id;
  QType qtype = QType::extractive;
  std::string lang;
  std::string raw;
  std::string reason;
};

std::string serialize_quarantine(const QuarantineRecord &q);

struct GenerationResult {
  std::vector<CandidateQAPair> pairs;
  std::vector<QuarantineRecord> quarantined;
  std::vector<std::string> warnings;
};

/// Top-level {...} spans of `text`, brace-matched outside JSON strings.
std::vector<std::string> brace_segments(std::string_view text);

/// Fills the generation template, submits it and parses every
/// {"question", "answer", "confidence"} record in the reply. Pair ids are
/// "<page>/<qtype>/<lang>/<n>" over the valid records.
GenerationResult generate_candidates(const std::string &page_id,
                                     const std::string &page_text, QType qtype,
                                     const std::string &lang, QaClient &qa,
                                     const PromptBundle &prompts);

enum class DedupScope { per_page, global };

struct FilterThresholds {
  int min_confidence = 7;
  double max_jaccard = 0.1;
  double max_normalized_edit = 0.5;
  int min_consistency_score = 7;
  DedupScope dedup_scope = DedupScope::per_page;

  void validate() const;
};

struct FilterStats {
  std::size_t origin = 0;
  std::size_t post_confidence = 0;
  std::size_t post_similarity = 0;
  std::size_t post_consistency = 0;
  std::size_t final_count = 0;

  bool monotone() const;
  std::string to_json() const;
  bool operator==(const FilterStats &) const = default;
};

/// One consistency-stage verdict.
struct ConsistencyDecision {
  std::string pair_id;
  bool kept = false;
  std::string reanswer;
  double normalized_edit = 1.0;
  std::optional<int> judge_score;  ///< set when the judge was consulted
  std::string reason;
};

/// Consistency-stage failure; earlier verdicts are already persisted.
class StageError : public Error {
 public:
  StageError(std::string pair_id, const std::string &what)
      : Error("pair " + pair_id + ": " + what), pair_id_(std::move(pair_id)) {}
  const std::string &pair_id() const noexcept { return pair_id_; }

 private:
  std::string pair_id_;
};

struct FilterResult {
  std::vector<CandidateQAPair> kept;  ///< input order
  FilterStats stats;
  std::vector<ConsistencyDecision> decisions;
};

/// Confidence filter, then Jaccard dedup (survivors chosen by confidence
/// desc, then id asc), then the re-answer consistency check. When
/// `checkpoint` is set, consistency verdicts are appended there and reused
/// on the next call.
FilterResult run_filter_chain(const std::vector<CandidateQAPair> &pairs,
                              const FilterThresholds &thresholds,
                              const ProviderSuite &providers,
                              const PromptBundle &prompts,
                              const std::optional<std::filesystem::path> &checkpoint = {});

/// Mean over original tokens of the best cosine against any round-trip
/// token; 0 when the round trip is empty. Throws DomainError for an empty
/// original.
double backtranslation_score(const std::vector<std::string> &original,
                             const std::vector<std::string> &roundtrip,
                             EmbeddingClient &embedder);

struct TranslationOutcome {
  std::string original;
  std::string translated;
  std::string back_translated;
  double score = 0.0;
  bool accepted = false;  ///< score >= threshold; otherwise queued for review

  std::string review_record(const LanguageTag &src, const LanguageTag &tgt) const;
};

/// Provider failures surface as ProviderError (retryable).
TranslationOutcome extend_multilingual(const std::string &question,
                                       const LanguageTag &src,
                                       const LanguageTag &tgt,
                                       TranslationClient &translator,
                                       EmbeddingClient &embedder,
                                       double threshold = 0.8);

}  // namespace lingogap
