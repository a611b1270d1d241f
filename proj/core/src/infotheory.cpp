// SPDX-License-Identifier: Apache-2.0
#include "lingogap/infotheory.hpp"

#include <cmath>
#include <random>

namespace lingogap {

double smoothed(double p, std::size_t vocab, double eps) noexcept {
  return (1.0 - eps) * p + eps / static_cast<double>(vocab);
}

double step_entropy(const StepDistribution &d) {
  double h = 0.0;
  for (double p : d.probs())
    if (p > 0.0) h -= p * std::log(p);
  // Rounding can push a one-hot a hair below zero.
  return h < 0.0 ? 0.0 : h;
}

EntropyValue sequence_entropy(const SequenceDistribution &s) {
  EntropyValue e;
  e.length = s.length();
  for (const auto &step : s.steps()) e.nats += step_entropy(step);
  return e;
}

double kl_divergence(const StepDistribution &p, const StepDistribution &q,
                     double eps) {
  if (p.size() != q.size())
    throw AlignmentError("kl_divergence: vocabulary sizes differ");
  const std::size_t v = p.size();
  double kl = 0.0;
  for (std::size_t w = 0; w < v; ++w) {
    const double pw = smoothed(p[w], v, eps);
    if (pw == 0.0) continue;
    const double qw = smoothed(q[w], v, eps);
    if (qw == 0.0)
      throw DomainError("kl_divergence: q(w) = 0 where p(w) > 0 at w = " +
                        std::to_string(w));
    kl += pw * std::log(pw / qw);
  }
  return kl < 0.0 ? 0.0 : kl;
}

double sequence_kl(const SequenceDistribution &ps,
                   const SequenceDistribution &qs, KlAggregation agg,
                   double eps) {
  if (ps.length() != qs.length())
    throw AlignmentError("sequence_kl: lengths " + std::to_string(ps.length()) +
                         " and " + std::to_string(qs.length()));
  double total = 0.0;
  for (std::size_t i = 0; i < ps.length(); ++i)
    total += kl_divergence(ps.steps()[i], qs.steps()[i], eps);
  if (agg == KlAggregation::mean && ps.length() > 0)
    total /= static_cast<double>(ps.length());
  return total;
}

VisualTokens noise_augment(const VisualTokens &v, const NoiseSpec &spec) {
  spec.validate();
  if (v.noisy()) throw DomainError("noise_augment: input is already noisy");
  std::vector<double> out = v.data();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (double &x : out) x += spec.mean + spec.stddev * noise(rng);
  return VisualTokens(v.dim(), std::move(out), true);
}

MIReport mutual_information(const SequenceDistribution &cond,
                            const SequenceDistribution &uncond) {
  MIReport r;
  r.h_cond = sequence_entropy(cond).nats;
  r.h_uncond = sequence_entropy(uncond).nats;
  r.mi = r.h_uncond - r.h_cond;
  r.length = cond.length();
  return r;
}

}  // namespace lingogap
