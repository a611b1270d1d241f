// SPDX-License-Identifier: Apache-2.0
/**
 * @file   providers.hpp
 * @brief  External-service interfaces used by the curation pipeline, with
 *         deterministic in-process implementations.
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "lingogap/types.hpp"

namespace lingogap {

/// A provider call failed; the pipeline may retry it.
class ProviderError : public Error {
 public:
  using Error::Error;
};

using Embedding = std::vector<double>;

class OcrClient {
 public:
  virtual ~OcrClient() = default;
  virtual std::string page_text(const std::string &page_id) = 0;
};

class QaClient {
 public:
  virtual ~QaClient() = default;
  virtual std::string complete(const std::string &prompt) = 0;
};

class TranslationClient {
 public:
  virtual ~TranslationClient() = default;
  virtual std::string translate(const std::string &text, const LanguageTag &from,
                                const LanguageTag &to) = 0;
};

class EmbeddingClient {
 public:
  virtual ~EmbeddingClient() = default;
  /// Unit-norm vector for one token.
  virtual Embedding embed(const std::string &token) = 0;
};

struct ProviderSuite {
  std::shared_ptr<OcrClient> ocr;
  std::shared_ptr<QaClient> qa;
  std::shared_ptr<EmbeddingClient> embedding;
  std::shared_ptr<TranslationClient> translation;
};

/// Returns the stored text per page id; unknown ids raise ProviderError.
class MockOcrClient : public OcrClient {
 public:
  explicit MockOcrClient(std::map<std::string, std::string> pages)
      : pages_(std::move(pages)) {}
  std::string page_text(const std::string &page_id) override;

 private:
  std::map<std::string, std::string> pages_;
};

/// Answers with the response of the first rule whose needle occurs in the
/// prompt, else with the fallback. Needles listed in `fail_on` throw
/// ProviderError instead, until cleared.
class ScriptedQaClient : public QaClient {
 public:
  explicit ScriptedQaClient(std::string fallback = "") : fallback_(std::move(fallback)) {}

  ScriptedQaClient &on(std::string needle, std::string response);
  ScriptedQaClient &fail_on(std::string needle);
  void clear_failures() { failures_.clear(); }

  std::string complete(const std::string &prompt) override;
  std::size_t calls() const noexcept { return calls_; }
  const std::vector<std::string> &prompts() const noexcept { return prompts_; }

 private:
  std::vector<std::pair<std::string, std::string>> rules_;
  std::set<std::string> failures_;
  std::string fallback_;
  std::size_t calls_ = 0;
  std::vector<std::string> prompts_;
};

/// Wraps a callable.
class FunctionQaClient : public QaClient {
 public:
  explicit FunctionQaClient(std::function<std::string(const std::string &)> fn)
      : fn_(std::move(fn)) {}
  std::string complete(const std::string &prompt) override { return fn_(prompt); }

 private:
  std::function<std::string(const std::string &)> fn_;
};

class IdentityTranslationClient : public TranslationClient {
 public:
  std::string translate(const std::string &text, const LanguageTag &,
                        const LanguageTag &) override {
    return text;
  }
};

/// Word-by-word dictionary; both directions are derived from one table of
/// (source word, target word) pairs. Unknown words pass through.
class DictionaryTranslationClient : public TranslationClient {
 public:
  DictionaryTranslationClient(LanguageTag src, LanguageTag tgt,
                              std::map<std::string, std::string> src_to_tgt);
  std::string translate(const std::string &text, const LanguageTag &from,
                        const LanguageTag &to) override;

 private:
  LanguageTag src_;
  LanguageTag tgt_;
  std::map<std::string, std::string> fwd_;
  std::map<std::string, std::string> bwd_;
};

/// Replaces every word with a hash-derived nonce word, in both directions,
/// so a round trip never recovers the original.
class ScramblingTranslationClient : public TranslationClient {
 public:
  explicit ScramblingTranslationClient(std::uint64_t salt = 0) : salt_(salt) {}
  std::string translate(const std::string &text, const LanguageTag &from,
                        const LanguageTag &to) override;

 private:
  std::uint64_t salt_;
};

/// Each distinct token gets its own basis vector, assigned in first-seen
/// order; throws ProviderError once `dim` tokens are in use.
class OneHotEmbeddingClient : public EmbeddingClient {
 public:
  explicit OneHotEmbeddingClient(std::size_t dim = 1024) : dim_(dim) {}
  Embedding embed(const std::string &token) override;

 private:
  std::size_t dim_;
  std::map<std::string, std::size_t> index_;
};

/// Gaussian vector seeded by a hash of the token, normalized.
class HashEmbeddingClient : public EmbeddingClient {
 public:
  explicit HashEmbeddingClient(std::size_t dim = 64, std::uint64_t seed = 0)
      : dim_(dim), seed_(seed) {}
  Embedding embed(const std::string &token) override;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

/// Explicit table, normalized on construction; unknown tokens raise
/// ProviderError.
class FixedEmbeddingClient : public EmbeddingClient {
 public:
  explicit FixedEmbeddingClient(std::map<std::string, Embedding> table);
  Embedding embed(const std::string &token) override;

 private:
  std::map<std::string, Embedding> table_;
};

double cosine(const Embedding &a, const Embedding &b);

}  // namespace lingogap
