// SPDX-License-Identifier: Apache-2.0
/**
 * @file   objective.hpp
 * @brief  Four directional cross-entropies plus two cross-lingual KL
 *         distillation terms, their logit gradients, and finite-difference
 *         checking for any model exposing the DirectionalProblem interface.
 *
 * Direction naming: first letter = question language, second = answer
 * language (s = source, t = target). Teachers are the monolingual directions
 * (tt for st, ss for ts) and receive no gradient from the KL terms.
 */
#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lingogap/infotheory.hpp"
#include "lingogap/types.hpp"

namespace lingogap {

enum class Direction : std::size_t { ss = 0, st = 1, ts = 2, tt = 3 };
inline constexpr std::array<Direction, 4> kDirections = {
    Direction::ss, Direction::st, Direction::ts, Direction::tt};

std::string_view to_string(Direction d) noexcept;
Direction direction_from_string(std::string_view s);
bool question_is_source(Direction d) noexcept;
bool answer_is_source(Direction d) noexcept;

struct LossWeights {
  double alpha = 1.0;  ///< weight of KL(P^st || P^tt)
  double beta = 1.0;   ///< weight of KL(P^ts || P^ss)

  void validate() const;
};

/// Which parts of the objective are active. Weights stay in LossWeights.
struct ObjectiveTerms {
  bool cross_ce = true;  ///< ce_ts and ce_st
  KlAggregation kl = KlAggregation::sum;
};

struct DirectionalEntry {
  SequenceDistribution dist;
  Tokens gold;
};

struct DirectionalBatch {
  std::array<DirectionalEntry, 4> entries;

  DirectionalEntry &operator[](Direction d) {
    return entries[static_cast<std::size_t>(d)];
  }
  const DirectionalEntry &operator[](Direction d) const {
    return entries[static_cast<std::size_t>(d)];
  }
  void validate() const;
};

struct LossBreakdown {
  static constexpr double kIdentityTolerance = 1e-9;

  double ce_ss = 0.0;
  double ce_ts = 0.0;
  double ce_st = 0.0;
  double ce_tt = 0.0;
  double kl_to_tt = 0.0;  ///< KL(P^st || P^tt)
  double kl_to_ss = 0.0;  ///< KL(P^ts || P^ss)
  double total = 0.0;

  LossBreakdown &operator+=(const LossBreakdown &o);
  LossBreakdown scaled(double f) const;
  bool all_finite() const;
  std::string describe() const;
};

/// -sum_i ln p~_i(gold_i) with the same smoothing as kl_divergence.
double cross_entropy(const SequenceDistribution &dist, const Tokens &gold,
                     double eps = kSmoothing);

/// Optional frozen teachers. When set, the KL terms use these distributions
/// in place of the batch's own monolingual entries (finite differences of the
/// stop-gradient objective need this).
struct FrozenTeachers {
  SequenceDistribution ss;
  SequenceDistribution tt;
};

LossBreakdown mvcl_mi_loss(const DirectionalBatch &batch, const LossWeights &w,
                           const ObjectiveTerms &terms = {},
                           const FrozenTeachers *teachers = nullptr);

/// dL/dz for every direction and step, z being the pre-softmax logits that
/// produced each StepDistribution. Teacher paths get CE gradients only.
struct LogitGradients {
  std::array<std::vector<std::vector<double>>, 4> dlogits;

  std::vector<std::vector<double>> &operator[](Direction d) {
    return dlogits[static_cast<std::size_t>(d)];
  }
  const std::vector<std::vector<double>> &operator[](Direction d) const {
    return dlogits[static_cast<std::size_t>(d)];
  }
};

LogitGradients mvcl_mi_logit_gradients(const DirectionalBatch &batch,
                                       const LossWeights &w,
                                       const ObjectiveTerms &terms = {});

/// A differentiable model bound to a set of training examples. forward()
/// evaluates the four directional passes of one example; backward()
/// accumulates parameter gradients for that example from logit gradients.
class DirectionalProblem {
 public:
  virtual ~DirectionalProblem() = default;
  virtual std::size_t num_examples() const = 0;
  virtual std::span<double> parameters() = 0;
  virtual std::string parameter_name(std::size_t index) const = 0;
  virtual DirectionalBatch forward(std::size_t example) = 0;
  virtual void backward(std::size_t example, const LogitGradients &g,
                        std::span<double> grad) = 0;
};

struct GradientResult {
  LossBreakdown loss;            ///< summed over examples
  std::vector<double> gradient;  ///< d(sum of totals)/d(params)
};

/// Summed loss and its analytic gradient. Throws NumericalError naming the
/// parameter if any gradient entry is non-finite.
GradientResult loss_gradient(DirectionalProblem &problem, const LossWeights &w,
                             const ObjectiveTerms &terms = {});

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  std::string worst_parameter;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
};

/// Central differences of the summed total with teachers frozen at the
/// current parameters. Relative error is |a - n| / max(|a|, |n|, floor).
GradientCheckResult check_gradient(DirectionalProblem &problem,
                                   const LossWeights &w,
                                   const ObjectiveTerms &terms = {},
                                   double h = 1e-5, double floor = 1e-6,
                                   std::span<const std::size_t> indices = {});

}  // namespace lingogap
