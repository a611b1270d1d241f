// SPDX-License-Identifier: Apache-2.0
/**
 * @file   synthtask.hpp
 * @brief  Deterministic glyph-grid key/value VQA task with a source and a
 *         target vocabulary related by a seeded bijection.
 *
 * Token ids: 0 pad, 1 eos, 2 bos_src, 3 bos_tgt, then the source vocabulary,
 * then the target vocabulary. Source index layout: keys, values, template
 * words, fillers. Glyph 0 is a blank cell; source index i renders as glyph
 * 1 + i.
 */
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lingogap/types.hpp"

namespace lingogap {

inline constexpr TokenId kPadToken = 0;
inline constexpr TokenId kEosToken = 1;
inline constexpr TokenId kBosSrcToken = 2;
inline constexpr TokenId kBosTgtToken = 3;
inline constexpr TokenId kNumSpecialTokens = 4;

inline const LanguageTag &source_lang() {
  static const LanguageTag tag("srcL");
  return tag;
}
inline const LanguageTag &target_lang() {
  static const LanguageTag tag("tgtL");
  return tag;
}

struct SplitSizes {
  int train = 1000;
  int val = 100;
  int test = 500;
};

struct TaskSpec {
  int num_keys = 16;
  int num_values = 16;
  int facts_per_image = 4;
  int grid_width = 8;
  int grid_height = 8;
  int template_len = 3;
  int num_fillers = 5;
  double filler_prob = 0.3;
  std::uint64_t seed = 7;
  SplitSizes split_sizes;

  /// Throws ConfigError when the spec cannot be rendered.
  void validate() const;
  int source_vocab_size() const {
    return num_keys + num_values + template_len + num_fillers;
  }
  int glyph_vocab_size() const { return 1 + source_vocab_size(); }
  int vocab_size() const { return kNumSpecialTokens + 2 * source_vocab_size(); }
};

class BilingualLexicon {
 public:
  /// Source tokens follow the specials; target tokens follow the source
  /// block; `bijection[i]` is the target index paired with source index i.
  BilingualLexicon(int size, std::vector<int> bijection);

  static BilingualLexicon for_task(const TaskSpec &spec);

  int size() const noexcept { return static_cast<int>(src_.size()); }
  const Tokens &src_tokens() const noexcept { return src_; }
  const Tokens &tgt_tokens() const noexcept { return tgt_; }
  const std::vector<int> &bijection() const noexcept { return bijection_; }

  bool is_src(TokenId t) const noexcept;
  bool is_tgt(TokenId t) const noexcept;
  TokenId to_tgt(TokenId src) const;
  TokenId to_src(TokenId tgt) const;
  /// Maps every token into the requested language (specials pass through).
  Tokens map(const Tokens &tokens, const LanguageTag &lang) const;
  bool operator==(const BilingualLexicon &) const = default;

 private:
  Tokens src_;
  Tokens tgt_;
  std::vector<int> bijection_;
  std::vector<int> inverse_;
};

struct TaskVocabulary {
  TaskSpec spec;

  TokenId key_token(int k) const { return kNumSpecialTokens + k; }
  TokenId value_token(int v) const {
    return kNumSpecialTokens + spec.num_keys + v;
  }
  TokenId template_token(int i) const {
    return kNumSpecialTokens + spec.num_keys + spec.num_values + i;
  }
  int glyph_of_source(TokenId src) const { return 1 + (src - kNumSpecialTokens); }
  TokenId source_of_glyph(int glyph) const {
    return kNumSpecialTokens + glyph - 1;
  }
  bool is_key_glyph(int g) const { return g >= 1 && g <= spec.num_keys; }
  bool is_value_glyph(int g) const {
    return g > spec.num_keys && g <= spec.num_keys + spec.num_values;
  }
};

struct DatasetSplits {
  std::vector<VQASample> train;
  std::vector<VQASample> val;
  std::vector<VQASample> test;
};

/// Template tokens followed by the key, in `lang`. `key` is a source key token.
Tokens render_question(TokenId key, const LanguageTag &lang,
                       const BilingualLexicon &lex, const TaskSpec &spec);

/// Each image yields four samples ordered ss, st, ts, tt with ids
/// "<split>-<index>/<direction>".
DatasetSplits generate_dataset(const TaskSpec &spec,
                               const BilingualLexicon &lex);

TokenId bos_for(const LanguageTag &answer_lang);

/// Groups the four directional variants of each image, in first-seen order.
/// Entry order inside a group is ss, st, ts, tt.
struct ImageGroup {
  std::string image_id;
  std::array<std::size_t, 4> index;
};
std::vector<ImageGroup> group_by_image(const std::vector<VQASample> &samples);

std::string lexicon_to_json(const BilingualLexicon &lex, const TaskSpec &spec);
BilingualLexicon lexicon_from_json(std::string_view text);

std::string task_spec_to_json(const TaskSpec &spec);
TaskSpec task_spec_from_json(std::string_view text);

}  // namespace lingogap
