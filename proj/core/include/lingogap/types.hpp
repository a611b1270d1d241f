// SPDX-License-Identifier: Apache-2.0
/**
 * @file   types.hpp
 * @brief  Shared domain types: language tags, glyph images, visual tokens,
 *         VQA samples, per-step distributions and MI reports.
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lingogap {

inline constexpr std::string_view kToolkitVersion = "0.1.0";

using TokenId = std::int32_t;
using Tokens = std::vector<TokenId>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value is outside the domain an operation accepts.
class DomainError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Sequences that must be position-aligned are not.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// A value violates a type invariant; `field()` names the offending field.
class InvariantError : public Error {
 public:
  InvariantError(std::string field, const std::string &what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string &field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Malformed serialized input. `position()` is a byte offset into the record.
class ParseError : public Error {
 public:
  ParseError(std::size_t position, const std::string &what)
      : Error("parse error at byte " + std::to_string(position) + ": " + what),
        position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// Non-finite value during optimisation; `parameter()` names the segment.
class NumericalError : public Error {
 public:
  NumericalError(std::string parameter, const std::string &what)
      : Error(parameter + ": " + what), parameter_(std::move(parameter)) {}
  const std::string &parameter() const noexcept { return parameter_; }

 private:
  std::string parameter_;
};

class LanguageTag {
 public:
  explicit LanguageTag(std::string code);
  const std::string &code() const noexcept { return code_; }
  bool operator==(const LanguageTag &) const = default;
  auto operator<=>(const LanguageTag &) const = default;

 private:
  std::string code_;
};

/// Row-major grid of glyph ids in [0, glyph_vocab_size).
class GlyphImage {
 public:
  GlyphImage(int width, int height, int glyph_vocab_size,
             std::vector<int> cells);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int glyph_vocab_size() const noexcept { return glyph_vocab_size_; }
  int at(int row, int col) const { return cells_.at(row * width_ + col); }
  const std::vector<int> &cells() const noexcept { return cells_; }
  std::size_t size() const noexcept { return cells_.size(); }
  bool operator==(const GlyphImage &) const = default;

 private:
  int width_;
  int height_;
  int glyph_vocab_size_;
  std::vector<int> cells_;
};

/// A non-empty sequence of equal-dimension real vectors, stored flat.
class VisualTokens {
 public:
  VisualTokens(std::size_t dim, std::vector<double> data, bool noisy = false);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t count() const noexcept { return data_.size() / dim_; }
  bool noisy() const noexcept { return noisy_; }
  const std::vector<double> &data() const noexcept { return data_; }
  const double *row(std::size_t i) const { return data_.data() + i * dim_; }
  bool operator==(const VisualTokens &) const = default;

 private:
  std::size_t dim_;
  std::vector<double> data_;
  bool noisy_;
};

struct NoiseSpec {
  double mean = 0.0;
  double stddev = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class QType { extractive, abstractive, yesno };

std::string_view to_string(QType t) noexcept;
QType qtype_from_string(std::string_view s);

struct VQASample {
  std::string id;
  GlyphImage image;
  Tokens question;
  LanguageTag question_lang;
  Tokens gold_answer;
  LanguageTag answer_lang;
  QType qtype = QType::extractive;

  /// Throws InvariantError naming the first violated field.
  void validate() const;
  bool operator==(const VQASample &) const = default;
};

/// Probability vector over a closed vocabulary; sums to 1 within 1e-6.
class StepDistribution {
 public:
  static constexpr double kSumTolerance = 1e-6;

  explicit StepDistribution(std::vector<double> probs);
  const std::vector<double> &probs() const noexcept { return probs_; }
  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  bool operator==(const StepDistribution &) const = default;

 private:
  std::vector<double> probs_;
};

class SequenceDistribution {
 public:
  SequenceDistribution() = default;
  SequenceDistribution(std::vector<StepDistribution> steps, Tokens realized);

  const std::vector<StepDistribution> &steps() const noexcept { return steps_; }
  const Tokens &realized_tokens() const noexcept { return realized_; }
  std::size_t length() const noexcept { return steps_.size(); }
  bool empty() const noexcept { return steps_.empty(); }
  bool operator==(const SequenceDistribution &) const = default;

 private:
  std::vector<StepDistribution> steps_;
  Tokens realized_;
};

/// Per-sample noise-contrast mutual information, in nats (summed over steps).
struct MIReport {
  static constexpr double kIdentityTolerance = 1e-9;

  std::string sample_id;
  double h_uncond = 0.0;
  double h_cond = 0.0;
  double mi = 0.0;
  bool correct = false;
  std::string question_lang;
  std::size_t length = 0;

  void validate() const;
  double h_cond_per_token() const;
  double h_uncond_per_token() const;
  double mi_per_token() const;
};

}  // namespace lingogap
