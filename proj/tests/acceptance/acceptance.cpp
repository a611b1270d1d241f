// SPDX-License-Identifier: Apache-2.0
// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.
// Tolerances and budgets are fixed here and nowhere else.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lingogap/corpus.hpp"
#include "lingogap/evalkit.hpp"
#include "lingogap/infotheory.hpp"
#include "lingogap/objective.hpp"
#include "lingogap/trainer.hpp"
#include "support/cli_driver.hpp"
#include "support/oracles.hpp"
#include "support/testing.hpp"

namespace lingogap {
namespace {

namespace lt = lingogap::testing;

constexpr double kUniformEntropyTol = 1e-9;
constexpr double kMiIdentityTol = 1e-9;
constexpr double kInfotheoryBudgetS = 10.0;
constexpr double kFdStep = 1e-5;
constexpr double kFdMaxRelError = 1e-4;
constexpr double kFdFloor = 1e-6;
constexpr std::size_t kMaxToyParams = 5000;
constexpr double kGradientBudgetS = 60.0;
constexpr double kRecompositionTol = 1e-9;
constexpr double kMonoPreservation = 0.02;
constexpr double kAblationBudgetS = 600.0;
constexpr double kMinSeparationSe = 2.0;
constexpr std::size_t kMinIncorrect = 50;
constexpr double kPipelineBudgetS = 600.0;
const std::vector<std::uint64_t> kAblationSeeds = {1, 2, 3, 4, 5};
constexpr std::uint64_t kEntropySeed = 1;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string &what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char *f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ------------------------------------------------------------------------

void infotheory_suite(Outcome &o) {
  std::mt19937_64 rng(11);
  std::size_t bound_bad = 0, oracle_bad = 0;
  for (int i = 0; i < 2000; ++i) {
    const std::size_t v = 1 + static_cast<std::size_t>(i % 60);
    const auto d = lt::random_step(rng, v, i % 3 == 0);
    const double h = step_entropy(d);
    bound_bad += !(h >= 0.0 && h <= std::log(static_cast<double>(v)) + 1e-12);
    oracle_bad += std::abs(h - lt::oracle_entropy(d.probs())) > 1e-12;
  }
  o.check(bound_bad == 0, "entropy bounds");
  o.check(oracle_bad == 0, "entropy oracle");

  double uniform_err = 0.0;
  for (std::size_t v : {1u, 2u, 3u, 17u, 84u, 1000u, 4096u}) {
    const StepDistribution u(std::vector<double>(v, 1.0 / static_cast<double>(v)));
    uniform_err = std::max(uniform_err, std::abs(step_entropy(u) - std::log(static_cast<double>(v))));
  }
  o.check(uniform_err <= kUniformEntropyTol, "uniform entropy");

  std::size_t kl_neg = 0, kl_self = 0, kl_zero_distinct = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t v = 2 + static_cast<std::size_t>(i % 40);
    const auto p = lt::random_step(rng, v, i % 2 == 0);
    const auto q = lt::random_step(rng, v, i % 5 == 0);
    kl_neg += kl_divergence(p, q) < 0.0;
    kl_self += kl_divergence(p, p) != 0.0;
    kl_zero_distinct += p.probs() != q.probs() && kl_divergence(p, q) <= 0.0;
  }
  o.check(kl_neg == 0, "KL >= 0");
  o.check(kl_self == 0, "KL(p,p) = 0");
  o.check(kl_zero_distinct == 0, "KL > 0 for p != q");

  double mi_self = 0.0, identity = 0.0;
  for (int i = 0; i < 500; ++i) {
    const auto a = lt::random_sequence(rng, 11, 1 + static_cast<std::size_t>(i % 5));
    const auto b = lt::random_sequence(rng, 11, a.length());
    mi_self = std::max(mi_self, std::abs(mutual_information(a, a).mi));
    const MIReport r = mutual_information(a, b);
    identity = std::max(identity, std::abs(r.mi - (r.h_uncond - r.h_cond)));
  }
  o.check(mi_self == 0.0, "MI(x,x) = 0");
  o.check(identity <= kMiIdentityTol, "MI identity");
  o.detail << "uniform err " << fmt("%.1e", uniform_err) << ", MI identity err "
           << fmt("%.1e", identity) << ", 1000 KL pairs";
}

// Smoothed CE and KL recomputed from step probabilities in extended
// precision. Differencing per component keeps the cancellation at the scale
// of a single term instead of the batch total; at h = 1e-5 the double-precision
// total alone leaves roundoff near 1e-10 in the quotient.
long double ce_ld(const SequenceDistribution &d, const Tokens &gold) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto &p = d.steps()[i].probs();
    const long double v = static_cast<long double>(p.size());
    s -= std::log((1.0L - kSmoothing) * p[gold[i]] + kSmoothing / v);
  }
  return s;
}

long double kl_ld(const SequenceDistribution &a, const SequenceDistribution &b) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < a.length(); ++i) {
    const auto &p = a.steps()[i].probs();
    const auto &q = b.steps()[i].probs();
    const long double v = static_cast<long double>(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) {
      const long double x = (1.0L - kSmoothing) * p[k] + kSmoothing / v;
      const long double y = (1.0L - kSmoothing) * q[k] + kSmoothing / v;
      s += x * (std::log(x) - std::log(y));
    }
  }
  return s;
}

// Central differences of the full loss with teachers frozen, using the
// extended-precision terms above rather than the library's loss.
void gradient_check(Outcome &o) {
  const TaskSpec spec;
  const auto lex = BilingualLexicon::for_task(spec);
  const auto splits = generate_dataset(spec, lex);
  const ToyModel model(ModelConfig::for_task(spec, 5));
  o.check(model.num_parameters() <= kMaxToyParams, "parameter budget");
  const auto all = make_examples(splits.train);
  std::mt19937_64 rng(23);
  std::normal_distribution<double> jitter(0.0, 0.05);
  const LossWeights w{1.0, 1.0};
  const std::array<long double, 6> weight = {1, 1, 1, 1, w.alpha, w.beta};
  double worst = 0.0;
  for (int b = 0; b < 5; ++b) {
    ModelState state = model.init_state();
    for (double &p : state.params) p += jitter(rng);
    std::vector<TrainingExample> batch;
    for (int k = 0; k < 2; ++k) batch.push_back(all[rng() % all.size()]);
    ToyProblem problem(model, state, batch);
    const GradientResult analytic = loss_gradient(problem, w);
    std::vector<FrozenTeachers> teachers;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const auto fwd = problem.forward(i);
      teachers.push_back({fwd[Direction::ss].dist, fwd[Direction::tt].dist});
    }
    const auto terms = [&] {
      std::vector<std::array<long double, 6>> t;
      for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto f = problem.forward(i);
        t.push_back({ce_ld(f[Direction::ss].dist, f[Direction::ss].gold),
                     ce_ld(f[Direction::ts].dist, f[Direction::ts].gold),
                     ce_ld(f[Direction::st].dist, f[Direction::st].gold),
                     ce_ld(f[Direction::tt].dist, f[Direction::tt].gold),
                     kl_ld(f[Direction::st].dist, teachers[i].tt),
                     kl_ld(f[Direction::ts].dist, teachers[i].ss)});
      }
      return t;
    };
    auto params = problem.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double orig = params[i];
      params[i] = orig + kFdStep;
      const auto up = terms();
      params[i] = orig - kFdStep;
      const auto down = terms();
      params[i] = orig;
      long double diff = 0.0L;
      for (std::size_t e = 0; e < up.size(); ++e)
        for (std::size_t c = 0; c < 6; ++c) diff += weight[c] * (up[e][c] - down[e][c]);
      const double num = static_cast<double>(diff / (2 * kFdStep));
      const double a = analytic.gradient[i];
      worst = std::max(worst, std::abs(a - num) / std::max({std::abs(a), std::abs(num), kFdFloor}));
    }
  }
  o.check(worst < kFdMaxRelError, "max relative error");
  o.detail << model.num_parameters() << " params x 5 batches, max rel err " << fmt("%.2e", worst);
}

void recomposition(Outcome &o) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> wd(0.0, 3.0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto b = lt::random_batch(rng, 1 + static_cast<std::size_t>(i % 4));
    const LossWeights w{wd(rng), wd(rng)};
    const LossBreakdown l = mvcl_mi_loss(b, w);
    const auto ce = [&](Direction d) { return cross_entropy(b[d].dist, b[d].gold); };
    const double parts =
        ce(Direction::ss) + ce(Direction::ts) + ce(Direction::st) + ce(Direction::tt) +
        w.alpha * sequence_kl(b[Direction::st].dist, b[Direction::tt].dist) +
        w.beta * sequence_kl(b[Direction::ts].dist, b[Direction::ss].dist);
    worst = std::max(worst, std::abs(l.total - parts));
    worst = std::max(worst, std::abs(l.total - lt::oracle_total(b, w.alpha, w.beta, true)) /
                                (1.0 + l.total));
  }
  o.check(worst <= kRecompositionTol, "recomposition");

  const TaskSpec spec = lt::small_task(3);
  const auto lex = BilingualLexicon::for_task(spec);
  const auto splits = generate_dataset(spec, lex);
  const ToyModel model(ModelConfig::for_task(spec, 3));
  const ModelState init = model.init_state();
  TrainConfig zero;
  zero.warmup_epochs = 1;
  zero.epochs = 2;
  zero.weights = {0.0, 0.0};
  TrainConfig no_kl = zero;
  no_kl.weights = {};
  no_kl.ablation = Ablation::no_kl;
  const RunRecord a = train(splits, lex, model, init, zero);
  const RunRecord b = train(splits, lex, model, init, no_kl);
  o.check(a.final_state.params == b.final_state.params, "alpha=beta=0 params");
  o.check(a.test.acc == b.test.acc, "alpha=beta=0 metrics");
  o.detail << "100 batches, max err " << fmt("%.1e", worst) << ", zero-weight run bit-identical to no_kl";
}

void ablation_direction(Outcome &o) {
  const TaskSpec spec;
  const auto lex = BilingualLexicon::for_task(spec);
  const auto splits = generate_dataset(spec, lex);
  const TrainConfig base;
  const auto t0 = std::chrono::steady_clock::now();
  const AblationTable t =
      compare_ablations(splits, lex, ModelConfig::for_task(spec, 1), base, kAblationSeeds);
  const double elapsed = seconds_since(t0);
  const auto *full = t.find(Ablation::full);
  const auto *no_kl = t.find(Ablation::no_kl);
  const auto *no_cce = t.find(Ablation::no_cross_ce);
  o.check(full->gap < no_kl->gap, "gap(full) < gap(no_kl)");
  o.check(full->cross > no_cce->cross, "cross(full) > cross(no_cross_ce)");
  o.check(std::abs(full->mono - no_kl->mono) <= kMonoPreservation, "mono preserved");
  o.check(elapsed < kAblationBudgetS, "runtime");
  o.detail << kAblationSeeds.size() << " seeds; full mono/cross/gap " << fmt("%.3f", full->mono)
           << "/" << fmt("%.3f", full->cross) << "/" << fmt("%.3f", full->gap) << ", no_kl "
           << fmt("%.3f", no_kl->mono) << "/" << fmt("%.3f", no_kl->cross) << "/"
           << fmt("%.3f", no_kl->gap) << ", no_cross_ce cross " << fmt("%.3f", no_cce->cross)
           << ", " << fmt("%.0f s", elapsed);
}

void entropy_direction(Outcome &o) {
  const TaskSpec spec;
  const auto lex = BilingualLexicon::for_task(spec);
  const auto splits = generate_dataset(spec, lex);
  const ToyModel model(ModelConfig::for_task(spec, kEntropySeed));
  TrainConfig cfg;
  cfg.seed = kEntropySeed;
  const RunRecord run = train(splits, lex, model, model.init_state(), cfg);
  const LexiconTranslator tr(lex);
  const auto summarize = [&](const ModelState &s) {
    return mi_accuracy_report(
        analyze_mi(splits.test, model, s, tr, source_lang(), default_noise_spec(model, s, 0)));
  };
  MISummary summary = summarize(run.final_state);
  std::size_t incorrect = 0;
  for (const auto &l : summary.languages) incorrect += l.incorrect.n;
  const char *which = "final model";
  if (incorrect < kMinIncorrect && run.snapshot) {
    summary = summarize(*run.snapshot);
    which = "1/4 snapshot";
    incorrect = 0;
    for (const auto &l : summary.languages) incorrect += l.incorrect.n;
  }
  o.check(incorrect >= kMinIncorrect, "incorrect sample count");
  o.detail << which << ", " << incorrect << " incorrect;";
  for (const auto &l : summary.languages) {
    const auto sep = l.separation();
    o.check(l.incorrect.mean > l.correct.mean, l.lang + " mean order");
    o.check(sep && *sep >= kMinSeparationSe, l.lang + " separation");
    o.detail << " " << l.lang << " " << fmt("%.3f", l.correct.mean) << " vs "
             << fmt("%.3f", l.incorrect.mean) << " (" << fmt("%.1f SE", sep.value_or(0.0)) << ")";
  }
  o.check(summary.correlation && *summary.correlation > 0.0, "MI-accuracy correlation");
  o.detail << "; corr " << fmt("%+.2f", summary.correlation.value_or(0.0));
}

void filter_oracles(Outcome &o) {
  const std::size_t jac = lt::jaccard_mismatches();
  const std::size_t ed = lt::edit_distance_mismatches();
  o.check(jac == 0, "jaccard");
  o.check(ed == 0, "edit distance");
  const auto r = run_filter_chain(lt::fixture_pairs(), {}, lt::fixture_providers(lt::fixture_qa()),
                                  lt::bundled_prompts());
  o.check(r.stats.origin == 20 && r.stats.post_confidence == 16 && r.stats.post_similarity == 14 &&
              r.stats.post_consistency == 10 && r.stats.final_count == 10,
          "funnel stats");
  o.check(lt::ids(r.kept) == lt::kFunnelKept, "kept set");
  o.check(lt::ids(r.kept).count("f02") == 1, "confidence-7 boundary kept");
  o.detail << jac << "+" << ed << " mismatches; funnel " << r.stats.origin << "/"
           << r.stats.post_confidence << "/" << r.stats.post_similarity << "/"
           << r.stats.post_consistency << "/" << r.stats.final_count;
}

void metric_oracles(Outcome &o) {
  o.check(std::abs(token_f1({5, 6, 7}, {5, 6, 8}) - 2.0 / 3.0) <= 1e-15, "2/3 case");
  o.check(token_f1({}, {}) == 1.0 && token_f1({1}, {}) == 0.0 && token_f1({}, {1}) == 0.0,
          "empty cases");
  o.check(token_f1({4, 9}, {4, 9}) == 1.0, "exact case");
  std::mt19937_64 rng(77);
  std::vector<EvalResult> rs;
  for (int i = 0; i < 500; ++i) rs.push_back(lt::random_result(rng, i));
  const std::size_t bad =
      lt::gap_table_mismatches(gap_table(rs, "srcL", {"srcL", "tgtL", "xx"}), rs, "srcL");
  o.check(bad == 0, "gap table");
  o.detail << "token_f1 cases exact; gap_table " << bad << " mismatches over 500 results";
}

void determinism(Outcome &o) {
  lt::TempDir dir("acceptance_det");
  const std::string root = LINGOGAP_SOURCE_DIR;
  const std::string data = (dir / "data").string();
  const auto in = [&](const std::string &run, const std::string &f) {
    return (dir / run / f).string();
  };
  // Each invocation is parameterized by the output directory only.
  const std::vector<std::pair<std::string, std::function<std::vector<std::string>(const std::string &)>>>
      subcommands = {
          {"synth", [&](const std::string &out) { return std::vector<std::string>{"synth", "--out", out}; }},
          {"train", [&](const std::string &out) {
             return std::vector<std::string>{"train", "--data", data, "--out", out};
           }},
          {"eval", [&](const std::string &out) {
             return std::vector<std::string>{"eval", "--data", data, "--checkpoint",
                                             in("train_a", "checkpoint.json"), "--out", out};
           }},
          {"analyze-mi", [&](const std::string &out) {
             return std::vector<std::string>{"analyze-mi", "--data", data, "--checkpoint",
                                             in("train_a", "snapshot.json"), "--out", out};
           }},
          {"ablate", [&](const std::string &out) {
             return std::vector<std::string>{"ablate", "--data", data, "--out", out,
                                             "--set", "seeds=[1,2,3]"};
           }},
          {"filter", [&](const std::string &out) {
             return std::vector<std::string>{
                 "filter", "--config", root + "/configs/filter_demo.json", "--pages",
                 root + "/configs/demo/pages.jsonl", "--prompts",
                 std::string(LINGOGAP_TEST_DATA_DIR) + "/prompts", "--out", out};
           }},
      };
  double pipeline = 0.0;
  std::size_t files = 0;
  for (const auto &[name, args] : subcommands) {
    std::string hash[2];
    for (int k = 0; k < 2; ++k) {
      const std::string out = k == 0 ? name + "_a" : name + "_b";
      const auto t0 = std::chrono::steady_clock::now();
      const auto r = lt::run_cli(args((dir / out).string()));
      if (name != "ablate" && name != "filter" && k == 0) pipeline += seconds_since(t0);
      o.check(r.code == 0, name + " exit code");
      if (r.code != 0) {
        o.detail << " " << name << ": " << r.err;
        return;
      }
      hash[k] = nlohmann::json::parse(r.out).at("config_hash").get<std::string>();
    }
    if (name == "synth") std::filesystem::copy(dir / "synth_a", dir / "data");
    o.check(hash[0] == hash[1], name + " config hash");
    const auto a = lt::tree(dir / (name + "_a"));
    const auto b = lt::tree(dir / (name + "_b"));
    o.check(!a.empty() && a == b, name + " outputs");
    files += a.size();
  }
  o.check(pipeline < kPipelineBudgetS, "pipeline runtime");
  o.detail << subcommands.size() << " subcommands, " << files
           << " output files identical across reruns; default synth-train-eval-analyze "
           << fmt("%.1f s", pipeline);
}

// ------------------------------------------------------------------------

struct Criterion {
  int number;
  const char *name;
  std::function<void(Outcome &)> run;
  double budget_s = 0.0;  ///< 0: no runtime limit beyond the criterion's own
};

}  // namespace
}  // namespace lingogap

int main() {
  using namespace lingogap;
  const std::vector<Criterion> criteria = {
      {1, "information-theory oracles", infotheory_suite, kInfotheoryBudgetS},
      {2, "gradient check", gradient_check, kGradientBudgetS},
      {3, "loss recomposition", recomposition},
      {4, "ablation directions", ablation_direction},
      {5, "entropy vs correctness", entropy_direction},
      {6, "filter-math oracles", filter_oracles},
      {7, "metric oracles", metric_oracles},
      {8, "CLI determinism", determinism},
  };
  int failures = 0;
  for (const auto &c : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception &e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    const double elapsed = seconds_since(t0);
    if (c.budget_s > 0.0 && elapsed >= c.budget_s) {
      o.pass = false;
      o.detail << " [failed: runtime]";
    }
    failures += !o.pass;
    std::printf("criterion %d %s %s: %s (%.1f s)\n", c.number, o.pass ? "PASS" : "FAIL", c.name,
                o.detail.str().c_str(), elapsed);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
