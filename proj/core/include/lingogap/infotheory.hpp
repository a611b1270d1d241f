// SPDX-License-Identifier: Apache-2.0
/**
 * @file   infotheory.hpp
 * @brief  Shannon entropy, smoothed KL divergence and noise-contrast mutual
 *         information over per-step answer distributions.
 */
#pragma once

#include <cstddef>

#include "lingogap/types.hpp"

namespace lingogap {

/// Weight of the uniform component mixed into both KL arguments (and into
/// cross-entropy): p' = (1 - eps) p + eps / |V|.
inline constexpr double kSmoothing = 1e-8;

struct EntropyValue {
  double nats = 0.0;
  std::size_t length = 0;

  double per_token() const {
    return length == 0 ? 0.0 : nats / static_cast<double>(length);
  }
};

enum class KlAggregation { sum, mean };

double smoothed(double p, std::size_t vocab, double eps = kSmoothing) noexcept;

/// -sum_w p(w) ln p(w) over the full vocabulary, with 0 ln 0 = 0.
double step_entropy(const StepDistribution &d);

/// Chain-rule sum of step entropies; an empty sequence has entropy 0.
EntropyValue sequence_entropy(const SequenceDistribution &s);

/// KL(p || q) after uniform smoothing of both arguments. eps = 0 disables
/// smoothing; a support violation then raises DomainError.
double kl_divergence(const StepDistribution &p, const StepDistribution &q,
                     double eps = kSmoothing);

/// Per-position KL, summed (or averaged with KlAggregation::mean).
double sequence_kl(const SequenceDistribution &ps,
                   const SequenceDistribution &qs,
                   KlAggregation agg = KlAggregation::sum,
                   double eps = kSmoothing);

/// Adds i.i.d. N(mean, stddev) to every embedding coordinate. Requires a clean
/// input; the result is flagged noisy.
VisualTokens noise_augment(const VisualTokens &v, const NoiseSpec &spec);

/// h_uncond, h_cond and their difference. `sample_id`, `correct` and
/// `question_lang` are left for the caller to fill.
MIReport mutual_information(const SequenceDistribution &cond,
                            const SequenceDistribution &uncond);

}  // namespace lingogap
