// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <random>
#include <string>

#include "lingogap/infotheory.hpp"
#include "lingogap/objective.hpp"
#include "lingogap/text.hpp"
#include "lingogap/toymodel.hpp"

namespace {

using namespace lingogap;

StepDistribution random_step(std::mt19937_64 &rng, std::size_t vocab) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p(vocab);
  double s = 0.0;
  for (double &x : p) s += (x = u(rng));
  for (double &x : p) x /= s;
  return StepDistribution(std::move(p));
}

void BM_StepEntropy(benchmark::State &state) {
  std::mt19937_64 rng(1);
  const auto d = random_step(rng, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(step_entropy(d));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_StepEntropy)->RangeMultiplier(8)->Range(8, 32768)->Complexity();

void BM_KlDivergence(benchmark::State &state) {
  std::mt19937_64 rng(2);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto p = random_step(rng, n), q = random_step(rng, n);
  for (auto _ : state) benchmark::DoNotOptimize(kl_divergence(p, q));
}
BENCHMARK(BM_KlDivergence)->RangeMultiplier(8)->Range(8, 32768);

void BM_EditDistance(benchmark::State &state) {
  std::mt19937_64 rng(3);
  const auto len = static_cast<std::size_t>(state.range(0));
  std::string a(len, 'a'), b(len, 'a');
  for (auto &c : a) c = static_cast<char>('a' + rng() % 4);
  for (auto &c : b) c = static_cast<char>('a' + rng() % 4);
  for (auto _ : state) benchmark::DoNotOptimize(edit_distance(a, b));
}
BENCHMARK(BM_EditDistance)->RangeMultiplier(4)->Range(4, 1024);

class ToyFixture : public benchmark::Fixture {
 public:
  void SetUp(const benchmark::State &) override {
    if (model) return;
    lex.emplace(BilingualLexicon::for_task(spec));
    splits = generate_dataset(spec, *lex);
    model.emplace(ModelConfig::for_task(spec, 1));
    params = model->init_state();
    examples = make_examples(splits.train);
    examples.resize(16);
  }

  TaskSpec spec;
  std::optional<BilingualLexicon> lex;
  DatasetSplits splits;
  std::optional<ToyModel> model;
  ModelState params;
  std::vector<TrainingExample> examples;
};

BENCHMARK_F(ToyFixture, ForwardDirections)(benchmark::State &state) {
  for (auto _ : state)
    for (const auto &e : examples) benchmark::DoNotOptimize(model->forward_directions(e, params, nullptr));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(examples.size()));
}

BENCHMARK_F(ToyFixture, LossGradientBatch16)(benchmark::State &state) {
  ModelState st = params;
  ToyProblem problem(*model, st, examples);
  for (auto _ : state) benchmark::DoNotOptimize(loss_gradient(problem, LossWeights{}));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(examples.size()));
}

}  // namespace

BENCHMARK_MAIN();
