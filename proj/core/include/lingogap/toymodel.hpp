// SPDX-License-Identifier: Apache-2.0
/**
 * @file   toymodel.hpp
 * @brief  Tiny vision-encoder / projector / decoder with hand-written
 *         backpropagation.
 *
 * Forward pass for one (image, question, answer-language) query:
 *
 *   e_j   = glyph_embed[cell_j]                      encode_image
 *   v_j   = proj_w e_j + proj_b                      project
 *   k_j   = normalize(attn_key v_j)
 *   u_j   = attn_value [v_j ; v_{j+1}]               cell and right neighbour
 *   s_j   = scale * sum_t query_weight[t] (k_j . attn_key emb(q_t))
 *   r     = sum_j softmax(s)_j u_j
 *   c_i   = mean(emb(bos), emb(y_1..y_{i-1}))
 *   h_i   = tanh(read_w r + ctx_w c_i + hidden_b)
 *   p_i   = softmax(out_w h_i + out_b)
 *
 * emb(t) is token_embed[t], except for tokens in the tied range, whose
 * embedding is project(glyph_embed[glyph of t]).
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lingogap/objective.hpp"
#include "lingogap/synthtask.hpp"
#include "lingogap/types.hpp"

namespace lingogap {

struct ModelConfig {
  int glyph_vocab_size = 41;
  int glyph_embed_dim = 12;
  int projector_dim = 12;
  int key_dim = 12;
  int decoder_hidden_dim = 24;
  int vocab_size = 84;
  int max_question_len = 4;
  int max_answer_len = 1;
  TokenId bos_src = kBosSrcToken;
  TokenId bos_tgt = kBosTgtToken;
  TokenId eos = kEosToken;
  TokenId tied_token_begin = kNumSpecialTokens;
  int tied_token_count = 40;
  int tied_glyph_begin = 1;
  double attention_scale = 1.0;
  double glyph_init_scale = 1.0;
  double token_init_scale = 0.1;
  /// Initial query_weight of every question position but the last.
  double query_prefix_init = 0.0;
  std::uint64_t seed = 1;

  void validate() const;
  static ModelConfig for_task(const TaskSpec &spec, std::uint64_t seed);
  bool operator==(const ModelConfig &) const = default;
};

struct Segment {
  std::string name;
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const noexcept { return rows * cols; }
};

struct ModelState {
  std::vector<double> params;
  std::uint64_t step = 0;

  bool all_finite() const;
  bool operator==(const ModelState &) const = default;
};

struct Generation {
  Tokens tokens;  ///< realized tokens, including a final EOS if emitted
  SequenceDistribution dist;

  /// `tokens` without a trailing EOS.
  Tokens answer(TokenId eos) const;
};

/// One image with its question and gold answer in both languages.
struct TrainingExample {
  const GlyphImage *image = nullptr;
  Tokens question_src;
  Tokens question_tgt;
  Tokens gold_src;
  Tokens gold_tgt;
};

std::vector<TrainingExample> make_examples(const std::vector<VQASample> &samples);

class ToyModel {
 public:
  explicit ToyModel(ModelConfig config);

  const ModelConfig &config() const noexcept { return config_; }
  const std::vector<Segment> &segments() const noexcept { return segments_; }
  const Segment &segment(std::string_view name) const;
  std::size_t num_parameters() const noexcept { return num_params_; }
  /// "segment[row,col]" for a flat parameter index.
  std::string parameter_name(std::size_t index) const;

  ModelState init_state() const;
  void check_state(const ModelState &state) const;

  VisualTokens encode_image(const GlyphImage &img, const ModelState &s) const;
  VisualTokens project(const VisualTokens &v, const ModelState &s) const;

  /// Teacher-forced per-step distributions for `gold`, given projected
  /// visual tokens.
  SequenceDistribution decode_distributions(const VisualTokens &projected,
                                            const Tokens &question, TokenId bos,
                                            const Tokens &gold,
                                            const ModelState &s) const;

  /// Greedy decoding; stops after emitting EOS or at max_len tokens.
  Generation generate(const VisualTokens &projected, const Tokens &question,
                      TokenId bos, const ModelState &s, int max_len) const;

  /// encode -> project -> greedy decode with config().max_answer_len.
  Generation answer(const GlyphImage &img, const Tokens &question, TokenId bos,
                    const ModelState &s) const;

  /// Population standard deviation of all glyph embedding entries.
  double glyph_embedding_stddev(const ModelState &s) const;

  /// Four teacher-forced directional passes for one example. `trace`
  /// receives what backward() needs.
  struct Trace;
  DirectionalBatch forward_directions(const TrainingExample &ex,
                                      const ModelState &s, Trace *trace) const;
  void backward_directions(const TrainingExample &ex, const ModelState &s,
                           const Trace &trace, const LogitGradients &g,
                           std::span<double> grad) const;

 private:
  ModelConfig config_;
  std::vector<Segment> segments_;
  std::size_t num_params_ = 0;
};

/// Binds a model, a mutable state and a set of examples to the
/// DirectionalProblem interface used by loss_gradient / check_gradient.
class ToyProblem : public DirectionalProblem {
 public:
  ToyProblem(const ToyModel &model, ModelState &state,
             std::vector<TrainingExample> examples);
  ~ToyProblem() override;

  std::size_t num_examples() const override { return examples_.size(); }
  std::span<double> parameters() override { return state_.params; }
  std::string parameter_name(std::size_t index) const override {
    return model_.parameter_name(index);
  }
  DirectionalBatch forward(std::size_t example) override;
  void backward(std::size_t example, const LogitGradients &g,
                std::span<double> grad) override;

 private:
  const ToyModel &model_;
  ModelState &state_;
  std::vector<TrainingExample> examples_;
  std::vector<std::unique_ptr<ToyModel::Trace>> traces_;
};

}  // namespace lingogap
