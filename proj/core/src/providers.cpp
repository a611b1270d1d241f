// SPDX-License-Identifier: Apache-2.0
#include "lingogap/providers.hpp"

#include <cmath>
#include <random>

#include "lingogap/hash.hpp"
#include "lingogap/text.hpp"

namespace lingogap {

std::string MockOcrClient::page_text(const std::string &page_id) {
  auto it = pages_.find(page_id);
  if (it == pages_.end()) throw ProviderError("ocr: unknown page " + page_id);
  return it->second;
}

ScriptedQaClient &ScriptedQaClient::on(std::string needle, std::string response) {
  rules_.emplace_back(std::move(needle), std::move(response));
  return *this;
}

ScriptedQaClient &ScriptedQaClient::fail_on(std::string needle) {
  failures_.insert(std::move(needle));
  return *this;
}

std::string ScriptedQaClient::complete(const std::string &prompt) {
  ++calls_;
  prompts_.push_back(prompt);
  for (const auto &needle : failures_)
    if (prompt.find(needle) != std::string::npos)
      throw ProviderError("qa: scripted failure on '" + needle + "'");
  for (const auto &[needle, response] : rules_)
    if (prompt.find(needle) != std::string::npos) return response;
  return fallback_;
}

namespace {

std::string join(const std::vector<std::string> &words) {
  std::string out;
  for (const auto &w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

}  // namespace

DictionaryTranslationClient::DictionaryTranslationClient(
    LanguageTag src, LanguageTag tgt, std::map<std::string, std::string> src_to_tgt)
    : src_(std::move(src)), tgt_(std::move(tgt)), fwd_(std::move(src_to_tgt)) {
  for (const auto &[a, b] : fwd_) {
    if (!bwd_.emplace(b, a).second)
      throw ConfigError("dictionary is not invertible at '" + b + "'");
  }
}

std::string DictionaryTranslationClient::translate(const std::string &text,
                                                   const LanguageTag &from,
                                                   const LanguageTag &to) {
  const std::map<std::string, std::string> *table = nullptr;
  if (from == src_ && to == tgt_) {
    table = &fwd_;
  } else if (from == tgt_ && to == src_) {
    table = &bwd_;
  } else if (from == to) {
    return text;
  } else {
    throw ProviderError("translate: unsupported pair " + from.code() + "->" + to.code());
  }
  std::vector<std::string> words = word_tokens(text);
  for (auto &w : words) {
    auto it = table->find(w);
    if (it != table->end()) w = it->second;
  }
  return join(words);
}

std::string ScramblingTranslationClient::translate(const std::string &text,
                                                   const LanguageTag &from,
                                                   const LanguageTag &to) {
  std::vector<std::string> words = word_tokens(text);
  for (auto &w : words)
    w = "z" + hex64(fnv1a64(w + "|" + from.code() + ">" + to.code(),
                             0xcbf29ce484222325ULL ^ salt_));
  return join(words);
}

Embedding OneHotEmbeddingClient::embed(const std::string &token) {
  auto it = index_.find(token);
  if (it == index_.end()) {
    if (index_.size() >= dim_)
      throw ProviderError("one-hot embedding: dimension exhausted");
    it = index_.emplace(token, index_.size()).first;
  }
  Embedding e(dim_, 0.0);
  e[it->second] = 1.0;
  return e;
}

namespace {

void normalize(Embedding &e) {
  double n = 0.0;
  for (double x : e) n += x * x;
  n = std::sqrt(n);
  if (!(n > 0.0) || !std::isfinite(n)) throw DomainError("embedding has zero norm");
  for (double &x : e) x /= n;
}

}  // namespace

Embedding HashEmbeddingClient::embed(const std::string &token) {
  std::mt19937_64 rng(seed_ ^ fnv1a64(token));
  std::normal_distribution<double> z(0.0, 1.0);
  Embedding e(dim_);
  for (double &x : e) x = z(rng);
  normalize(e);
  return e;
}

FixedEmbeddingClient::FixedEmbeddingClient(std::map<std::string, Embedding> table)
    : table_(std::move(table)) {
  std::size_t dim = 0;
  for (auto &[tok, e] : table_) {
    if (dim == 0) dim = e.size();
    if (e.size() != dim || dim == 0)
      throw ConfigError("fixed embeddings must share one non-zero dimension");
    normalize(e);
  }
}

Embedding FixedEmbeddingClient::embed(const std::string &token) {
  auto it = table_.find(token);
  if (it == table_.end()) throw ProviderError("embedding: unknown token " + token);
  return it->second;
}

double cosine(const Embedding &a, const Embedding &b) {
  if (a.size() != b.size()) throw AlignmentError("cosine: dimension mismatch");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) throw DomainError("cosine: zero vector");
  return ab / std::sqrt(aa * bb);
}

}  // namespace lingogap
