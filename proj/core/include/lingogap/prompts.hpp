// SPDX-License-Identifier: Apache-2.0
/**
 * @file   prompts.hpp
 * @brief  Prompt template bundle for QA generation, re-answering and the
 *         consistency judge.
 *
 * Files are named generate_<qtype>_<lang>.txt, reanswer_<qtype>_<lang>.txt
 * and consistency_<lang>.txt. Templates are used as shipped; only the
 * angle-bracket placeholders are substituted.
 */
#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lingogap/types.hpp"

namespace lingogap {

inline constexpr const char *kContentSlot = "<my content here>";
inline constexpr const char *kQuestionSlot = "<my question here>";
inline constexpr const char *kAnswerSlot = "<my answer here>";
inline constexpr const char *kConfidenceSlot = "<my confidence score here>";

class PromptBundle {
 public:
  PromptBundle() = default;
  explicit PromptBundle(std::map<std::string, std::string> templates)
      : templates_(std::move(templates)) {}

  /// Reads every *.txt in `dir`; the stem is the template name.
  static PromptBundle load(const std::filesystem::path &dir);

  bool has(const std::string &name) const { return templates_.count(name) > 0; }
  /// Throws ConfigError when absent.
  const std::string &get(const std::string &name) const;
  std::vector<std::string> names() const;

  std::string generation_prompt(QType q, const std::string &lang,
                                const std::string &content) const;
  std::string reanswer_prompt(QType q, const std::string &lang,
                              const std::string &content,
                              const std::string &question) const;
  /// The question fills every question slot; answers and confidences fill
  /// their slots in order (original first).
  std::string consistency_prompt(const std::string &lang,
                                 const std::string &question,
                                 const std::string &answer1, int confidence1,
                                 const std::string &answer2,
                                 int confidence2) const;

 private:
  std::map<std::string, std::string> templates_;
};

/// Replaces every occurrence of `slot`; throws ConfigError if absent.
std::string fill_all(std::string text, const std::string &slot,
                     const std::string &value);
/// Replaces occurrences of `slot` left to right with `values`; the number of
/// occurrences must equal values.size().
std::string fill_in_order(std::string text, const std::string &slot,
                          const std::vector<std::string> &values);

}  // namespace lingogap
