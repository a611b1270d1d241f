// SPDX-License-Identifier: Apache-2.0
#include "lingogap/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "json_util.hpp"
#include "lingogap/checkpoint.hpp"

namespace lingogap {

using json = nlohmann::ordered_json;

std::string_view to_string(Ablation a) noexcept {
  switch (a) {
    case Ablation::full: return "full";
    case Ablation::no_kl: return "no_kl";
    case Ablation::no_cross_ce: return "no_cross_ce";
  }
  return "full";
}

Ablation ablation_from_string(std::string_view s) {
  if (s == "full") return Ablation::full;
  if (s == "no_kl") return Ablation::no_kl;
  if (s == "no_cross_ce") return Ablation::no_cross_ce;
  throw ConfigError("unknown ablation '" + std::string(s) + "'");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("learning_rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0))
    throw ConfigError("momentum must be in [0, 1)");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (warmup_epochs < 0) throw ConfigError("warmup_epochs must be >= 0");
  if (batch_size <= 0) throw ConfigError("batch_size must be > 0");
  if (eval_every < 0) throw ConfigError("eval_every must be >= 0");
  if (!(snapshot_fraction >= 0.0 && snapshot_fraction <= 1.0))
    throw ConfigError("snapshot_fraction must be in [0, 1]");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  weights.validate();
}

LossWeights TrainConfig::effective_weights() const {
  if (ablation == Ablation::no_kl) return {0.0, 0.0};
  return weights;
}

ObjectiveTerms TrainConfig::terms() const {
  ObjectiveTerms t;
  t.cross_ce = ablation != Ablation::no_cross_ce;
  t.kl = kl;
  return t;
}

std::string train_config_to_json(const TrainConfig &c) {
  json j;
  j["learning_rate"] = c.learning_rate;
  j["momentum"] = c.momentum;
  j["epochs"] = c.epochs;
  j["warmup_epochs"] = c.warmup_epochs;
  json dirs = json::array();
  for (Direction d : c.warmup_directions) dirs.push_back(std::string(to_string(d)));
  j["warmup_directions"] = std::move(dirs);
  j["batch_size"] = c.batch_size;
  j["alpha"] = c.weights.alpha;
  j["beta"] = c.weights.beta;
  j["ablation"] = std::string(to_string(c.ablation));
  j["kl"] = c.kl == KlAggregation::sum ? "sum" : "mean";
  j["seed"] = c.seed;
  j["eval_every"] = c.eval_every;
  j["snapshot_fraction"] = c.snapshot_fraction;
  j["workers"] = c.workers;
  return j.dump();
}

TrainConfig train_config_from_json(std::string_view text) {
  const json j = detail::parse_record(text);
  if (!j.is_object()) throw ConfigError("train config must be a JSON object");
  detail::reject_unknown_keys(
      j, {"v", "learning_rate", "momentum", "epochs", "warmup_epochs", "warmup_directions",
          "batch_size", "alpha", "beta", "ablation", "kl", "seed", "eval_every",
          "snapshot_fraction", "workers"},
      "train config");
  TrainConfig c;
  c.learning_rate = detail::get_or(j, "learning_rate", c.learning_rate);
  c.momentum = detail::get_or(j, "momentum", c.momentum);
  c.epochs = detail::get_or(j, "epochs", c.epochs);
  c.warmup_epochs = detail::get_or(j, "warmup_epochs", c.warmup_epochs);
  if (j.contains("warmup_directions")) {
    c.warmup_directions.clear();
    for (const auto &d : detail::get<std::vector<std::string>>(j, "warmup_directions"))
      c.warmup_directions.push_back(direction_from_string(d));
  }
  c.batch_size = detail::get_or(j, "batch_size", c.batch_size);
  c.weights.alpha = detail::get_or(j, "alpha", c.weights.alpha);
  c.weights.beta = detail::get_or(j, "beta", c.weights.beta);
  c.ablation = ablation_from_string(
      detail::get_or(j, "ablation", std::string(to_string(c.ablation))));
  const std::string kl = detail::get_or(j, "kl", std::string("sum"));
  if (kl == "sum") {
    c.kl = KlAggregation::sum;
  } else if (kl == "mean") {
    c.kl = KlAggregation::mean;
  } else {
    throw ConfigError("kl must be 'sum' or 'mean'");
  }
  c.seed = detail::get_or(j, "seed", c.seed);
  c.eval_every = detail::get_or(j, "eval_every", c.eval_every);
  c.snapshot_fraction = detail::get_or(j, "snapshot_fraction", c.snapshot_fraction);
  c.workers = detail::get_or(j, "workers", c.workers);
  c.validate();
  return c;
}

namespace {

json loss_json(const LossBreakdown &l) {
  return json{{"ce_ss", l.ce_ss},       {"ce_ts", l.ce_ts},
              {"ce_st", l.ce_st},       {"ce_tt", l.ce_tt},
              {"kl_to_tt", l.kl_to_tt}, {"kl_to_ss", l.kl_to_ss},
              {"total", l.total}};
}

json accuracy_json(const DirectionAccuracy &a) {
  json j;
  for (Direction d : kDirections)
    j[std::string("acc_") + std::string(to_string(d))] =
        a.acc[static_cast<std::size_t>(d)];
  j["mono"] = a.mono();
  j["cross"] = a.cross();
  j["gap"] = a.gap();
  j["samples"] = a.samples;
  return j;
}

/// CE on the listed directions only; other directions get zero gradients.
GradientResult warmup_gradient(ToyProblem &problem,
                               const std::vector<Direction> &dirs) {
  GradientResult r;
  r.gradient.assign(problem.parameters().size(), 0.0);
  const LossWeights none{0.0, 0.0};
  for (std::size_t ex = 0; ex < problem.num_examples(); ++ex) {
    const DirectionalBatch batch = problem.forward(ex);
    LogitGradients g = mvcl_mi_logit_gradients(batch, none, {});
    LossBreakdown l;
    for (Direction d : kDirections) {
      if (std::find(dirs.begin(), dirs.end(), d) == dirs.end()) {
        for (auto &step : g[d]) std::fill(step.begin(), step.end(), 0.0);
        continue;
      }
      const double ce = cross_entropy(batch[d].dist, batch[d].gold);
      switch (d) {
        case Direction::ss: l.ce_ss = ce; break;
        case Direction::st: l.ce_st = ce; break;
        case Direction::ts: l.ce_ts = ce; break;
        case Direction::tt: l.ce_tt = ce; break;
      }
      l.total += ce;
    }
    r.loss += l;
    problem.backward(ex, g, r.gradient);
  }
  for (std::size_t i = 0; i < r.gradient.size(); ++i)
    if (!std::isfinite(r.gradient[i]))
      throw NumericalError(problem.parameter_name(i), "non-finite gradient");
  return r;
}

}  // namespace

std::string RunRecord::to_json() const {
  json j;
  j["v"] = kRecordVersion;
  j["config"] = json::parse(train_config_to_json(config));
  j["model"] = json::parse(model_config_to_json(model));
  json ev = json::array();
  for (const auto &e : evals)
    ev.push_back(json{{"step", e.step},
                      {"epoch", e.epoch},
                      {"train_loss", loss_json(e.train_loss)},
                      {"val", accuracy_json(e.val)}});
  j["evals"] = std::move(ev);
  j["test"] = accuracy_json(test);
  j["final_step"] = final_state.step;
  j["snapshot_step"] = snapshot ? json(snapshot_step) : json(nullptr);
  return j.dump(2) + "\n";
}

RunRecord train(const DatasetSplits &splits, const BilingualLexicon &lex,
                const ToyModel &model, const ModelState &initial,
                const TrainConfig &cfg, const StepObserver &observer) {
  cfg.validate();
  model.check_state(initial);
  if (splits.train.empty()) throw ConfigError("empty training split");

  const LexiconTranslator translator(lex);
  const auto evaluate = [&](const std::vector<VQASample> &split,
                            const ModelState &s) {
    if (split.empty()) return DirectionAccuracy{};
    return direction_accuracy(
        evaluate_model(split, model, s, translator, source_lang(), cfg.workers));
  };

  RunRecord rec;
  rec.config = cfg;
  rec.model = model.config();
  ModelState state = initial;
  rec.evals.push_back({0, 0, {}, evaluate(splits.val, state)});

  if (cfg.epochs > 0) {
    const std::vector<TrainingExample> examples = make_examples(splits.train);
    const std::size_t n = examples.size();
    const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
    const std::size_t batches = (n + bs - 1) / bs;
    const auto total_steps = static_cast<std::uint64_t>(cfg.epochs) * batches;
    const auto snap_at = static_cast<std::uint64_t>(
        std::floor(cfg.snapshot_fraction * static_cast<double>(total_steps)));
    const LossWeights w = cfg.effective_weights();
    const ObjectiveTerms terms = cfg.terms();

    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(n);
    std::vector<double> velocity(state.params.size(), 0.0);
    std::uint64_t step = 0;
    LossBreakdown since_eval;
    std::uint64_t steps_since_eval = 0;

    const auto record_eval = [&](int epoch) {
      EvalPoint p;
      p.step = step;
      p.epoch = epoch;
      p.train_loss = steps_since_eval == 0
                         ? LossBreakdown{}
                         : since_eval.scaled(1.0 / static_cast<double>(steps_since_eval));
      p.val = evaluate(splits.val, state);
      rec.evals.push_back(std::move(p));
      since_eval = {};
      steps_since_eval = 0;
    };

    for (int ep = 0; ep < cfg.warmup_epochs + cfg.epochs; ++ep) {
      const bool warm = ep < cfg.warmup_epochs;
      const int epoch = warm ? 0 : ep - cfg.warmup_epochs + 1;
      if (!warm && epoch == 1 && snap_at == 0) {
        rec.snapshot = state;
        rec.snapshot_step = 0;
      }
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t b = 0; b < n; b += bs) {
        std::vector<TrainingExample> batch;
        for (std::size_t i = b; i < std::min(n, b + bs); ++i)
          batch.push_back(examples[order[i]]);
        const double scale = 1.0 / (4.0 * static_cast<double>(batch.size()));

        const std::uint64_t this_step = warm ? 0 : step + 1;
        const std::string where = warm ? "warm-up epoch " + std::to_string(ep + 1)
                                       : "step " + std::to_string(this_step);
        ToyProblem problem(model, state, batch);
        GradientResult gr;
        try {
          gr = warm ? warmup_gradient(problem, cfg.warmup_directions)
                    : loss_gradient(problem, w, terms);
        } catch (const NumericalError &e) {
          throw NumericalError(where, e.what());
        }
        const LossBreakdown loss = gr.loss.scaled(scale);
        if (!loss.all_finite()) {
          throw NumericalError(where, "non-finite loss (" + loss.describe() + ")");
        }
        if (observer) {
          StepInfo info;
          info.step = this_step;
          info.epoch = epoch;
          info.warmup = warm;
          info.before = &state;
          info.batch = &batch;
          info.loss = loss;
          observer(info);
        }
        for (std::size_t i = 0; i < velocity.size(); ++i) {
          velocity[i] = cfg.momentum * velocity[i] + scale * gr.gradient[i];
          state.params[i] -= cfg.learning_rate * velocity[i];
        }
        for (std::size_t i = 0; i < state.params.size(); ++i) {
          if (std::isfinite(state.params[i])) continue;
          throw NumericalError(where, model.parameter_name(i) +
                                          " non-finite after update (" +
                                          loss.describe() + ")");
        }
        ++state.step;
        if (warm) continue;
        ++step;
        since_eval += loss;
        ++steps_since_eval;
        if (step == snap_at) {
          rec.snapshot = state;
          rec.snapshot_step = step;
        }
        if (cfg.eval_every > 0 && step % static_cast<std::uint64_t>(cfg.eval_every) == 0)
          record_eval(epoch);
      }
      if (!warm && steps_since_eval > 0) record_eval(epoch);
    }
  }

  rec.test = evaluate(splits.test, state);
  rec.final_state = std::move(state);
  return rec;
}

const AblationSummary *AblationTable::find(Ablation a) const {
  for (const auto &s : summary)
    if (s.ablation == a) return &s;
  return nullptr;
}

std::string AblationTable::to_tsv() const {
  const auto f = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return std::string(buf);
  };
  std::string out = "seed\tablation\tacc_ss\tacc_st\tacc_ts\tacc_tt\tmono\tcross\tgap\n";
  for (const auto &r : rows) {
    out += std::to_string(r.seed) + "\t" + std::string(to_string(r.ablation));
    for (double a : r.test.acc) out += "\t" + f(a);
    out += "\t" + f(r.test.mono()) + "\t" + f(r.test.cross()) + "\t" +
           f(r.test.gap()) + "\n";
  }
  out += "\nablation\tmean_mono\tmean_cross\tmean_gap\n";
  for (const auto &s : summary)
    out += std::string(to_string(s.ablation)) + "\t" + f(s.mono) + "\t" +
           f(s.cross) + "\t" + f(s.gap) + "\n";
  return out;
}

AblationTable compare_ablations(const DatasetSplits &splits,
                                const BilingualLexicon &lex,
                                const ModelConfig &model_cfg,
                                const TrainConfig &base,
                                const std::vector<std::uint64_t> &seeds,
                                const std::vector<Ablation> &variants) {
  if (seeds.size() < 3) throw ConfigError("compare_ablations needs >= 3 seeds");
  if (variants.empty()) throw ConfigError("compare_ablations needs a variant");
  AblationTable t;
  for (Ablation v : variants) {
    bool seen = false;
    for (const auto &s : t.summary) seen = seen || s.ablation == v;
    if (!seen) t.summary.push_back({v, 0.0, 0.0, 0.0});
  }
  std::vector<std::size_t> counts(t.summary.size(), 0);
  for (std::uint64_t seed : seeds) {
    ModelConfig mc = model_cfg;
    mc.seed = seed;
    const ToyModel model(mc);
    const ModelState init = model.init_state();
    for (Ablation v : variants) {
      TrainConfig cfg = base;
      cfg.seed = seed;
      cfg.ablation = v;
      const RunRecord run = train(splits, lex, model, init, cfg);
      t.rows.push_back({seed, v, run.test});
      for (std::size_t i = 0; i < t.summary.size(); ++i) {
        if (t.summary[i].ablation != v) continue;
        t.summary[i].mono += run.test.mono();
        t.summary[i].cross += run.test.cross();
        t.summary[i].gap += run.test.gap();
        ++counts[i];
      }
    }
  }
  for (std::size_t i = 0; i < t.summary.size(); ++i) {
    const auto c = static_cast<double>(counts[i]);
    t.summary[i].mono /= c;
    t.summary[i].cross /= c;
    t.summary[i].gap /= c;
  }
  return t;
}

}  // namespace lingogap
