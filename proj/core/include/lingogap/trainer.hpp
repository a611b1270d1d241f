// SPDX-License-Identifier: Apache-2.0
/**
 * @file   trainer.hpp
 * @brief  SGD-with-momentum training of the toy model under the directional
 *         objective and its ablations.
 *
 * A run is a CE warm-up on the source-question directions followed by
 * `epochs` epochs of the configured objective. The momentum buffer carries
 * over between the two phases. Per-step loss is the batch sum of objective
 * totals divided by 4 x images.
 */
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lingogap/evalkit.hpp"
#include "lingogap/objective.hpp"
#include "lingogap/synthtask.hpp"
#include "lingogap/toymodel.hpp"

namespace lingogap {

enum class Ablation { full, no_kl, no_cross_ce };

std::string_view to_string(Ablation a) noexcept;
Ablation ablation_from_string(std::string_view s);

struct TrainConfig {
  double learning_rate = 0.05;
  double momentum = 0.9;
  int epochs = 1;
  int warmup_epochs = 6;
  std::vector<Direction> warmup_directions{Direction::ss, Direction::st};
  int batch_size = 16;
  LossWeights weights;
  Ablation ablation = Ablation::full;
  KlAggregation kl = KlAggregation::sum;
  std::uint64_t seed = 1;
  int eval_every = 0;  ///< objective steps between evals; 0: epoch ends only
  double snapshot_fraction = 0.25;
  int workers = 1;

  void validate() const;
  /// Weights after applying the ablation (no_kl zeroes both).
  LossWeights effective_weights() const;
  ObjectiveTerms terms() const;
};

std::string train_config_to_json(const TrainConfig &cfg);
TrainConfig train_config_from_json(std::string_view text);

struct EvalPoint {
  std::uint64_t step = 0;  ///< objective steps taken
  int epoch = 0;
  LossBreakdown train_loss;  ///< mean per-step loss since the previous point
  DirectionAccuracy val;
};

/// What an observer sees before each parameter update.
struct StepInfo {
  std::uint64_t step = 0;  ///< 1-based objective step; 0 during warm-up
  int epoch = 0;
  bool warmup = false;
  const ModelState *before = nullptr;
  const std::vector<TrainingExample> *batch = nullptr;
  LossBreakdown loss;  ///< normalized by 4 x batch images
};
using StepObserver = std::function<void(const StepInfo &)>;

struct RunRecord {
  TrainConfig config;
  ModelConfig model;
  std::vector<EvalPoint> evals;
  DirectionAccuracy test;
  ModelState final_state;
  std::optional<ModelState> snapshot;
  std::uint64_t snapshot_step = 0;

  std::string to_json() const;  ///< metrics only; states go to checkpoints
};

/// Trains from `initial`. epochs = 0 leaves the state untouched (warm-up is
/// skipped too) and records only the initial evaluation. Throws
/// NumericalError naming the step and loss components on a non-finite loss.
RunRecord train(const DatasetSplits &splits, const BilingualLexicon &lex,
                const ToyModel &model, const ModelState &initial,
                const TrainConfig &cfg, const StepObserver &observer = {});

struct AblationRow {
  std::uint64_t seed = 0;
  Ablation ablation = Ablation::full;
  DirectionAccuracy test;
};

struct AblationSummary {
  Ablation ablation = Ablation::full;
  double mono = 0.0;
  double cross = 0.0;
  double gap = 0.0;
};

struct AblationTable {
  std::vector<AblationRow> rows;
  std::vector<AblationSummary> summary;  ///< means over seeds, variant order

  const AblationSummary *find(Ablation a) const;
  std::string to_tsv() const;
};

/// Trains every variant for every seed; the model and shuffle seeds of a
/// run are both the table seed. Requires at least three seeds.
AblationTable compare_ablations(const DatasetSplits &splits,
                                const BilingualLexicon &lex,
                                const ModelConfig &model_cfg,
                                const TrainConfig &base,
                                const std::vector<std::uint64_t> &seeds,
                                const std::vector<Ablation> &variants = {
                                    Ablation::full, Ablation::no_kl,
                                    Ablation::no_cross_ce});

}  // namespace lingogap
