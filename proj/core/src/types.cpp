// SPDX-License-Identifier: Apache-2.0
#include "lingogap/types.hpp"

#include <cmath>

namespace lingogap {

LanguageTag::LanguageTag(std::string code) : code_(std::move(code)) {
  if (code_.empty()) throw InvariantError("language", "empty language tag");
}

GlyphImage::GlyphImage(int width, int height, int glyph_vocab_size,
                       std::vector<int> cells)
    : width_(width), height_(height), glyph_vocab_size_(glyph_vocab_size),
      cells_(std::move(cells)) {
  if (width_ <= 0) throw InvariantError("width", "must be positive");
  if (height_ <= 0) throw InvariantError("height", "must be positive");
  if (glyph_vocab_size_ <= 0)
    throw InvariantError("glyph_vocab_size", "must be positive");
  if (cells_.size() != static_cast<std::size_t>(width_) * height_)
    throw InvariantError("cells", "expected " + std::to_string(width_ * height_) +
                                      " cells, got " +
                                      std::to_string(cells_.size()));
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    if (cells_[i] < 0 || cells_[i] >= glyph_vocab_size_)
      throw InvariantError("cells", "glyph id " + std::to_string(cells_[i]) +
                                        " at cell " + std::to_string(i) +
                                        " out of range");
  }
}

VisualTokens::VisualTokens(std::size_t dim, std::vector<double> data,
                           bool noisy)
    : dim_(dim), data_(std::move(data)), noisy_(noisy) {
  if (dim_ == 0) throw InvariantError("dim", "must be positive");
  if (data_.empty()) throw InvariantError("embeddings", "empty sequence");
  if (data_.size() % dim_ != 0)
    throw InvariantError("embeddings", "size is not a multiple of dim");
}

void NoiseSpec::validate() const {
  if (!(stddev >= 0.0) || !std::isfinite(stddev))
    throw InvariantError("stddev", "must be finite and non-negative");
  if (!std::isfinite(mean)) throw InvariantError("mean", "must be finite");
}

std::string_view to_string(QType t) noexcept {
  switch (t) {
    case QType::extractive: return "extractive";
    case QType::abstractive: return "abstractive";
    case QType::yesno: return "yesno";
  }
  return "extractive";
}

QType qtype_from_string(std::string_view s) {
  if (s == "extractive") return QType::extractive;
  if (s == "abstractive") return QType::abstractive;
  if (s == "yesno") return QType::yesno;
  throw InvariantError("qtype", "unknown question type '" + std::string(s) + "'");
}

void VQASample::validate() const {
  if (id.empty()) throw InvariantError("id", "empty sample id");
  if (question.empty()) throw InvariantError("question", "empty question");
  if (gold_answer.empty())
    throw InvariantError("gold_answer", "empty gold answer");
}

StepDistribution::StepDistribution(std::vector<double> probs)
    : probs_(std::move(probs)) {
  if (probs_.empty()) throw InvariantError("probs", "empty distribution");
  double sum = 0.0;
  for (double p : probs_) {
    if (!std::isfinite(p) || p < 0.0)
      throw InvariantError("probs", "entries must be finite and >= 0");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSumTolerance)
    throw InvariantError("probs", "sums to " + std::to_string(sum));
}

SequenceDistribution::SequenceDistribution(std::vector<StepDistribution> steps,
                                           Tokens realized)
    : steps_(std::move(steps)), realized_(std::move(realized)) {
  if (steps_.size() != realized_.size())
    throw InvariantError("realized_tokens", "length differs from steps");
  for (std::size_t i = 0; i < steps_.size(); ++i) {
    const auto tok = realized_[i];
    if (tok < 0 || static_cast<std::size_t>(tok) >= steps_[i].size())
      throw InvariantError("realized_tokens", "token outside vocabulary");
    if (!(steps_[i][tok] > 0.0))
      throw InvariantError("realized_tokens",
                           "realized token has zero probability at step " +
                               std::to_string(i));
    if (i > 0 && steps_[i].size() != steps_[0].size())
      throw InvariantError("steps", "vocabulary size changes across steps");
  }
}

void MIReport::validate() const {
  if (!(h_cond >= 0.0)) throw InvariantError("h_cond", "must be >= 0");
  if (!(h_uncond >= 0.0)) throw InvariantError("h_uncond", "must be >= 0");
  if (std::abs(mi - (h_uncond - h_cond)) > kIdentityTolerance)
    throw InvariantError("mi", "mi != h_uncond - h_cond");
}

namespace {
double per_token(double v, std::size_t n) {
  return n == 0 ? 0.0 : v / static_cast<double>(n);
}
}  // namespace

double MIReport::h_cond_per_token() const { return per_token(h_cond, length); }
double MIReport::h_uncond_per_token() const {
  return per_token(h_uncond, length);
}
double MIReport::mi_per_token() const { return per_token(mi, length); }

}  // namespace lingogap
