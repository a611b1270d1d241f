// SPDX-License-Identifier: Apache-2.0
#include "lingogap_cli/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>

#include "lingogap/checkpoint.hpp"
#include "lingogap/corpus.hpp"
#include "lingogap/evalkit.hpp"
#include "lingogap/hash.hpp"
#include "lingogap/record.hpp"
#include "lingogap/synthtask.hpp"
#include "lingogap/trainer.hpp"

#ifndef LINGOGAP_DEFAULT_DATA_DIR
#define LINGOGAP_DEFAULT_DATA_DIR ""
#endif

namespace lingogap::cli {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

json model_defaults() {
  const ModelConfig m;
  return json{{"glyph_embed_dim", m.glyph_embed_dim},
              {"projector_dim", m.projector_dim},
              {"key_dim", m.key_dim},
              {"decoder_hidden_dim", m.decoder_hidden_dim},
              {"attention_scale", m.attention_scale},
              {"glyph_init_scale", m.glyph_init_scale},
              {"token_init_scale", m.token_init_scale},
              {"query_prefix_init", m.query_prefix_init},
              {"seed", nullptr}};
}

json train_defaults() {
  json t = json::parse(train_config_to_json(TrainConfig{}));
  t.erase("workers");
  return t;
}

}  // namespace

json default_config(const std::string &sub) {
  if (sub == "synth") return json{{"task", json::parse(task_spec_to_json(TaskSpec{}))}};
  if (sub == "train")
    return json{{"model", model_defaults()}, {"train", train_defaults()}, {"workers", 1}};
  if (sub == "ablate")
    return json{{"model", model_defaults()},
                {"train", train_defaults()},
                {"seeds", {1, 2, 3, 4, 5}},
                {"variants", {"full", "no_kl", "no_cross_ce"}},
                {"workers", 1}};
  if (sub == "eval")
    return json{{"split", "test"}, {"reference_lang", source_lang().code()}, {"workers", 1}};
  if (sub == "analyze-mi")
    return json{{"split", "test"},
                {"reference_lang", source_lang().code()},
                {"sigma_multiplier", 5.0},
                {"noise_mean", 0.0},
                {"noise_stddev", nullptr},
                {"noise_seed", 0},
                {"bins", 20},
                {"workers", 1}};
  if (sub == "filter") {
    const FilterThresholds t;
    return json{
        {"lang", "en"},
        {"qtypes", {"yesno", "extractive", "abstractive"}},
        {"thresholds",
         {{"min_confidence", t.min_confidence},
          {"max_jaccard", t.max_jaccard},
          {"max_normalized_edit", t.max_normalized_edit},
          {"min_consistency_score", t.min_consistency_score},
          {"dedup_scope", "per_page"}}},
        {"qa", {{"rules", json::array()}, {"fallback", ""}}},
        {"translate",
         {{"enabled", false},
          {"src", "en"},
          {"tgt", "zh"},
          {"threshold", 0.8},
          {"translator", "identity"},
          {"dictionary", json::object()},
          {"embedding", "onehot"},
          {"embedding_dim", 1024},
          {"embedding_seed", 0}}}};
  }
  throw UsageError("unknown subcommand '" + sub + "'");
}

json merge_config(const json &base, const json &user, const std::string &path) {
  if (!base.is_object() || base.empty()) return user;
  if (!user.is_object())
    throw UsageError("config key '" + path + "' must be an object");
  json out = base;
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) throw UsageError("unknown config key '" + key + "'");
    const json &b = base[it.key()];
    out[it.key()] = b.is_object() ? merge_config(b, it.value(), key) : it.value();
  }
  return out;
}

void apply_override(json &config, const std::string &assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw UsageError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception &) {
    value = raw;
  }
  json patch = value;
  std::size_t end = key.size();
  while (true) {
    const auto dot = key.rfind('.', end - 1);
    const std::size_t start = dot == std::string::npos ? 0 : dot + 1;
    patch = json{{key.substr(start, end - start), patch}};
    if (dot == std::string::npos) break;
    end = dot;
  }
  config = merge_config(config, patch);
}

std::string config_hash(const json &config) { return hex64(fnv1a64(config.dump())); }

json RunManifest::to_json() const {
  return json{{"subcommand", subcommand},
              {"config_hash", config_hash},
              {"config", config},
              {"inputs", inputs},
              {"outputs", outputs},
              {"seed", seed},
              {"toolkit_version", toolkit_version},
              {"wall_clock_seconds", wall_clock_seconds}};
}

fs::path resolve_output_dir(const std::string &out, const std::string &sub) {
  fs::path p = out.empty() ? fs::path("runs") / sub : fs::path(out);
  if (p.is_relative()) {
    if (const char *root = std::getenv(kOutputRootEnv); root && *root) p = fs::path(root) / p;
  }
  return p;
}

namespace {

struct Common {
  std::string config_file;
  std::vector<std::string> sets;
  std::string out;
  int workers = 0;
  bool dump_config = false;
};

json effective_config(const std::string &sub, const Common &c) {
  json cfg = default_config(sub);
  if (!c.config_file.empty()) {
    json user;
    try {
      user = json::parse(read_text_file(c.config_file));
    } catch (const json::parse_error &e) {
      throw UsageError("config " + c.config_file + ": " + e.what());
    }
    cfg = merge_config(cfg, user);
  }
  for (const auto &s : c.sets) apply_override(cfg, s);
  if (c.workers > 0) {
    if (!cfg.contains("workers")) throw UsageError(sub + " does not take --workers");
    cfg["workers"] = c.workers;
  }
  return cfg;
}

/// Writes a file under `dir` and records it.
class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }
  const fs::path &dir() const { return dir_; }
  fs::path path(const std::string &name) {
    files_.push_back(name);
    return dir_ / name;
  }
  void text(const std::string &name, const std::string &content) {
    write_text_file(path(name), content);
  }
  void lines(const std::string &name, const std::vector<std::string> &content) {
    write_lines(path(name), content);
  }
  void record(const std::string &name) { files_.push_back(name); }
  const std::vector<std::string> &files() const { return files_; }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

struct Dataset {
  TaskSpec spec;
  BilingualLexicon lex;
  DatasetSplits splits;
};

fs::path require_path(const std::string &p, const char *flag) {
  if (p.empty()) throw UsageError(std::string(flag) + " is required");
  return fs::path(p);
}

Dataset load_dataset(const fs::path &dir, bool all_splits = true,
                     const std::string &only = "") {
  Dataset d{task_spec_from_json(read_text_file(dir / "task.json")),
            lexicon_from_json(read_text_file(dir / "lexicon.json")),
            {}};
  const auto want = [&](const std::string &s) { return all_splits || s == only; };
  if (want("train")) d.splits.train = read_samples(dir / "train.jsonl");
  if (want("val")) d.splits.val = read_samples(dir / "val.jsonl");
  if (want("test")) d.splits.test = read_samples(dir / "test.jsonl");
  return d;
}

const std::vector<VQASample> &split_of(const Dataset &d, const std::string &name) {
  if (name == "train") return d.splits.train;
  if (name == "val") return d.splits.val;
  if (name == "test") return d.splits.test;
  throw UsageError("split must be train, val or test");
}

ModelConfig model_config(const TaskSpec &spec, const json &section,
                         std::uint64_t fallback_seed) {
  const std::uint64_t seed =
      section.at("seed").is_null() ? fallback_seed : section.at("seed").get<std::uint64_t>();
  json m = json::parse(model_config_to_json(ModelConfig::for_task(spec, seed)));
  for (auto it = section.begin(); it != section.end(); ++it)
    if (it.key() != "seed") m[it.key()] = it.value();
  return model_config_from_json(m.dump());
}

TrainConfig train_config(const json &cfg) {
  json t = cfg.at("train");
  t["workers"] = cfg.at("workers");
  return train_config_from_json(t.dump());
}

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string directions_tsv(const DirectionAccuracy &a) {
  std::string s = "direction\taccuracy\n";
  for (Direction d : kDirections)
    s += std::string(to_string(d)) + "\t" + fmt6(a.acc[static_cast<std::size_t>(d)]) + "\n";
  s += "mono\t" + fmt6(a.mono()) + "\ncross\t" + fmt6(a.cross()) + "\ngap\t" +
       fmt6(a.gap()) + "\n";
  return s;
}

fs::path default_prompts_dir() {
  if (const char *env = std::getenv("LINGOGAP_DATA_DIR"); env && *env)
    return fs::path(env) / "prompts";
  return fs::path(LINGOGAP_DEFAULT_DATA_DIR) / "prompts";
}

// --- subcommands ------------------------------------------------------------

json run_synth(const json &cfg, Outputs &o, RunManifest &m) {
  const TaskSpec spec = task_spec_from_json(cfg.at("task").dump());
  const BilingualLexicon lex = BilingualLexicon::for_task(spec);
  const DatasetSplits splits = generate_dataset(spec, lex);
  o.text("task.json", task_spec_to_json(spec));
  o.text("lexicon.json", lexicon_to_json(lex, spec));
  write_samples(o.path("train.jsonl"), splits.train);
  write_samples(o.path("val.jsonl"), splits.val);
  write_samples(o.path("test.jsonl"), splits.test);
  m.seed = spec.seed;
  return json{{"train", splits.train.size()},
              {"val", splits.val.size()},
              {"test", splits.test.size()}};
}

json run_train(const json &cfg, const fs::path &data, Outputs &o, RunManifest &m) {
  const Dataset d = load_dataset(data);
  const TrainConfig tc = train_config(cfg);
  const ToyModel model(model_config(d.spec, cfg.at("model"), tc.seed));
  const RunRecord rec = train(d.splits, d.lex, model, model.init_state(), tc);
  save_checkpoint(o.path("checkpoint.json"), model, rec.final_state);
  if (rec.snapshot) save_checkpoint(o.path("snapshot.json"), model, *rec.snapshot);
  o.text("run.json", rec.to_json());
  m.inputs["data"] = data.string();
  m.seed = tc.seed;
  return json{{"test_mono", rec.test.mono()},
              {"test_cross", rec.test.cross()},
              {"test_gap", rec.test.gap()}};
}

json run_ablate(const json &cfg, const fs::path &data, Outputs &o, RunManifest &m) {
  const Dataset d = load_dataset(data);
  const TrainConfig base = train_config(cfg);
  const std::vector<std::uint64_t> seeds = cfg.at("seeds").get<std::vector<std::uint64_t>>();
  std::vector<Ablation> variants;
  for (const auto &v : cfg.at("variants").get<std::vector<std::string>>())
    variants.push_back(ablation_from_string(v));
  const ModelConfig mc = model_config(d.spec, cfg.at("model"), base.seed);
  const AblationTable t = compare_ablations(d.splits, d.lex, mc, base, seeds, variants);
  o.text("ablation.tsv", t.to_tsv());
  json summary = json::array();
  for (const auto &s : t.summary)
    summary.push_back({{"ablation", std::string(to_string(s.ablation))},
                       {"mean_mono", s.mono},
                       {"mean_cross", s.cross},
                       {"mean_gap", s.gap}});
  o.text("ablation.json", summary.dump(2) + "\n");
  m.inputs["data"] = data.string();
  m.seed = cfg.at("seeds");
  return summary;
}

json run_eval(const json &cfg, const fs::path &data, const fs::path &ckpt, Outputs &o,
              RunManifest &m) {
  const std::string split = cfg.at("split").get<std::string>();
  const Dataset d = load_dataset(data, false, split);
  const Checkpoint c = load_checkpoint(ckpt);
  const ToyModel model(c.config);
  const LexiconTranslator tr(d.lex);
  const LanguageTag ref(cfg.at("reference_lang").get<std::string>());
  const auto results = evaluate_model(split_of(d, split), model, c.state, tr, ref,
                                      cfg.at("workers").get<int>());
  std::vector<std::string> lines;
  lines.reserve(results.size());
  for (const auto &r : results) lines.push_back(serialize_eval_result(r));
  o.lines("eval.jsonl", lines);
  const GapTable g =
      gap_table(results, ref.code(), {source_lang().code(), target_lang().code()});
  o.text("gap_table.tsv", g.to_tsv());
  const DirectionAccuracy a = direction_accuracy(results);
  o.text("directions.tsv", directions_tsv(a));
  m.inputs["data"] = data.string();
  m.inputs["checkpoint"] = ckpt.string();
  return json{{"mono", a.mono()}, {"cross", a.cross()}, {"gap", a.gap()},
              {"warnings", g.warnings}};
}

json run_analyze_mi(const json &cfg, const fs::path &data, const fs::path &ckpt,
                    Outputs &o, RunManifest &m) {
  const std::string split = cfg.at("split").get<std::string>();
  const Dataset d = load_dataset(data, false, split);
  const Checkpoint c = load_checkpoint(ckpt);
  const ToyModel model(c.config);
  const LexiconTranslator tr(d.lex);
  const LanguageTag ref(cfg.at("reference_lang").get<std::string>());
  const auto seed = cfg.at("noise_seed").get<std::uint64_t>();
  NoiseSpec noise =
      default_noise_spec(model, c.state, seed, cfg.at("sigma_multiplier").get<double>());
  noise.mean = cfg.at("noise_mean").get<double>();
  if (!cfg.at("noise_stddev").is_null()) noise.stddev = cfg.at("noise_stddev").get<double>();
  const auto reports = analyze_mi(split_of(d, split), model, c.state, tr, ref, noise,
                                  cfg.at("workers").get<int>());
  std::vector<std::string> lines;
  lines.reserve(reports.size());
  for (const auto &r : reports) lines.push_back(serialize_mi_report(r));
  o.lines("mi_reports.jsonl", lines);
  const MISummary s = mi_accuracy_report(reports, cfg.at("bins").get<std::size_t>());
  o.text("mi_summary.json", s.to_json());
  const EmittedPlots plots = emit_plots(s, o.dir() / "plots");
  for (const auto &p : plots.data) o.record("plots/" + p.filename().string());
  for (const auto &p : plots.plots) o.record("plots/" + p.filename().string());
  m.inputs["data"] = data.string();
  m.inputs["checkpoint"] = ckpt.string();
  m.seed = seed;
  json langs = json::array();
  for (const auto &l : s.languages) {
    const auto sep = l.separation();
    langs.push_back({{"lang", l.lang},
                     {"accuracy", l.accuracy},
                     {"mean_mi", l.mean_mi},
                     {"separation_se", sep ? json(*sep) : json(nullptr)}});
  }
  return json{{"noise_stddev", noise.stddev}, {"languages", langs},
              {"correlation", s.correlation ? json(*s.correlation) : json(nullptr)}};
}

std::shared_ptr<TranslationClient> make_translator(const json &t) {
  const std::string kind = t.at("translator").get<std::string>();
  if (kind == "identity") return std::make_shared<IdentityTranslationClient>();
  if (kind == "scrambling") return std::make_shared<ScramblingTranslationClient>();
  if (kind == "dictionary")
    return std::make_shared<DictionaryTranslationClient>(
        LanguageTag(t.at("src").get<std::string>()), LanguageTag(t.at("tgt").get<std::string>()),
        t.at("dictionary").get<std::map<std::string, std::string>>());
  throw UsageError("translate.translator must be identity, dictionary or scrambling");
}

std::shared_ptr<EmbeddingClient> make_embedder(const json &t) {
  const std::string kind = t.at("embedding").get<std::string>();
  const auto dim = t.at("embedding_dim").get<std::size_t>();
  if (kind == "onehot") return std::make_shared<OneHotEmbeddingClient>(dim);
  if (kind == "hash")
    return std::make_shared<HashEmbeddingClient>(dim, t.at("embedding_seed").get<std::uint64_t>());
  throw UsageError("translate.embedding must be onehot or hash");
}

json run_filter(const json &cfg, const std::string &pages_file, const std::string &pairs_file,
                const std::string &prompts_dir, Outputs &o, RunManifest &m) {
  std::map<std::string, std::string> pages;
  std::vector<std::string> page_order;
  std::size_t n = 0;
  for (const auto &line : read_lines(pages_file)) {
    ++n;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error &e) {
      throw ParseError(e.byte == 0 ? 0 : e.byte - 1,
                       pages_file + ":" + std::to_string(n) + ": " + e.what());
    }
    const std::string id = j.at("page_id").get<std::string>();
    if (!pages.emplace(id, j.at("text").get<std::string>()).second)
      throw InvariantError("page_id", "duplicate page " + id);
    page_order.push_back(id);
  }
  const fs::path pdir = prompts_dir.empty() ? default_prompts_dir() : fs::path(prompts_dir);
  const PromptBundle prompts = PromptBundle::load(pdir);

  auto qa = std::make_shared<ScriptedQaClient>(cfg.at("qa").at("fallback").get<std::string>());
  for (const auto &r : cfg.at("qa").at("rules"))
    qa->on(r.at("needle").get<std::string>(), r.at("response").get<std::string>());
  ProviderSuite providers;
  providers.ocr = std::make_shared<MockOcrClient>(pages);
  providers.qa = qa;

  const std::string lang = cfg.at("lang").get<std::string>();
  std::vector<CandidateQAPair> candidates;
  std::vector<std::string> quarantine, warnings;
  if (pairs_file.empty()) {
    for (const auto &page : page_order) {
      for (const auto &q : cfg.at("qtypes").get<std::vector<std::string>>()) {
        GenerationResult g =
            generate_candidates(page, pages.at(page), qtype_from_string(q), lang, *qa, prompts);
        for (auto &p : g.pairs) candidates.push_back(std::move(p));
        for (const auto &r : g.quarantined) quarantine.push_back(serialize_quarantine(r));
        for (auto &w : g.warnings) warnings.push_back(std::move(w));
      }
    }
  } else {
    candidates = read_pairs(pairs_file);
    m.inputs["pairs"] = pairs_file;
  }
  write_pairs(o.path("candidates.jsonl"), candidates);
  o.lines("quarantine.jsonl", quarantine);

  const json &th = cfg.at("thresholds");
  FilterThresholds t;
  t.min_confidence = th.at("min_confidence").get<int>();
  t.max_jaccard = th.at("max_jaccard").get<double>();
  t.max_normalized_edit = th.at("max_normalized_edit").get<double>();
  t.min_consistency_score = th.at("min_consistency_score").get<int>();
  const std::string scope = th.at("dedup_scope").get<std::string>();
  if (scope == "per_page") {
    t.dedup_scope = DedupScope::per_page;
  } else if (scope == "global") {
    t.dedup_scope = DedupScope::global;
  } else {
    throw UsageError("thresholds.dedup_scope must be per_page or global");
  }
  const FilterResult fr =
      run_filter_chain(candidates, t, providers, prompts, o.path("consistency_checkpoint.jsonl"));
  write_pairs(o.path("kept.jsonl"), fr.kept);
  o.text("filter_stats.json", fr.stats.to_json());

  const json &tj = cfg.at("translate");
  std::size_t flagged = 0;
  if (tj.at("enabled").get<bool>()) {
    auto translator = make_translator(tj);
    auto embedder = make_embedder(tj);
    const LanguageTag src(tj.at("src").get<std::string>());
    const LanguageTag tgt(tj.at("tgt").get<std::string>());
    std::vector<std::string> accepted, review;
    for (const auto &p : fr.kept) {
      const TranslationOutcome out = extend_multilingual(
          p.question, src, tgt, *translator, *embedder, tj.at("threshold").get<double>());
      json rec = json::parse(out.review_record(src, tgt));
      rec["pair_id"] = p.id;
      (out.accepted ? accepted : review).push_back(rec.dump());
    }
    flagged = review.size();
    o.lines("translations.jsonl", accepted);
    o.lines("review_queue.jsonl", review);
  }
  m.inputs["pages"] = pages_file;
  m.inputs["prompts"] = pdir.string();
  return json{{"stats", json::parse(fr.stats.to_json())},
              {"quarantined", quarantine.size()},
              {"review_flagged", flagged},
              {"warnings", warnings}};
}

}  // namespace

int dispatch(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"lingogap: cross-lingual VQA toolkit"};
  app.require_subcommand(0, 1);
  app.set_version_flag("--version", std::string(kToolkitVersion));

  Common common;
  std::string data, checkpoint, pages, pairs, prompts;
  const auto add_common = [&](CLI::App *s) {
    s->add_option("--config", common.config_file, "JSON config file")->check(CLI::ExistingFile);
    s->add_option("--set", common.sets, "Override a config key: key.path=value");
    s->add_option("--out", common.out, "Output directory");
    s->add_flag("--dump-config", common.dump_config, "Print the effective config and exit");
  };
  const auto add_workers = [&](CLI::App *s) {
    s->add_option("--workers", common.workers, "Parallel workers for evaluation")
        ->check(CLI::PositiveNumber);
  };

  CLI::App *synth = app.add_subcommand("synth", "Generate the synthetic bilingual dataset");
  add_common(synth);
  CLI::App *trn = app.add_subcommand("train", "Train the toy model");
  add_common(trn);
  add_workers(trn);
  trn->add_option("--data", data, "Directory written by synth");
  CLI::App *abl = app.add_subcommand("ablate", "Compare objective ablations over seeds");
  add_common(abl);
  add_workers(abl);
  abl->add_option("--data", data, "Directory written by synth");
  CLI::App *ev = app.add_subcommand("eval", "Score a checkpoint and build gap tables");
  add_common(ev);
  add_workers(ev);
  ev->add_option("--data", data, "Directory written by synth");
  ev->add_option("--checkpoint", checkpoint, "Checkpoint file")->check(CLI::ExistingFile);
  CLI::App *mi = app.add_subcommand("analyze-mi", "Entropy and mutual-information reports");
  add_common(mi);
  add_workers(mi);
  mi->add_option("--data", data, "Directory written by synth");
  mi->add_option("--checkpoint", checkpoint, "Checkpoint file")->check(CLI::ExistingFile);
  CLI::App *flt = app.add_subcommand("filter", "Generate and filter QA pairs");
  add_common(flt);
  flt->add_option("--pages", pages, "JSONL of {page_id, text}")->check(CLI::ExistingFile);
  flt->add_option("--pairs", pairs, "Pre-generated candidate pairs (skips generation)")
      ->check(CLI::ExistingFile);
  flt->add_option("--prompts", prompts, "Prompt template directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (app.get_subcommands().empty()) {
    err << app.help();
    return kExitUsage;
  }
  CLI::App *sub = app.get_subcommands().front();
  const std::string name = sub->get_name();

  try {
    const auto t0 = std::chrono::steady_clock::now();
    const json cfg = effective_config(name, common);
    if (common.dump_config) {
      out << cfg.dump(2) << "\n";
      return kExitOk;
    }
    if (name != "synth" && name != "filter") require_path(data, "--data");
    if (name == "eval" || name == "analyze-mi") require_path(checkpoint, "--checkpoint");
    if (name == "filter") require_path(pages, "--pages");
    Outputs o(resolve_output_dir(common.out, name));
    RunManifest m;
    m.subcommand = name;
    m.config = cfg;
    m.config_hash = config_hash(cfg);
    m.toolkit_version = kToolkitVersion;
    json summary;
    if (name == "synth") {
      summary = run_synth(cfg, o, m);
    } else if (name == "train") {
      summary = run_train(cfg, require_path(data, "--data"), o, m);
    } else if (name == "ablate") {
      summary = run_ablate(cfg, require_path(data, "--data"), o, m);
    } else if (name == "eval") {
      summary = run_eval(cfg, require_path(data, "--data"), require_path(checkpoint, "--checkpoint"), o, m);
    } else if (name == "analyze-mi") {
      summary = run_analyze_mi(cfg, require_path(data, "--data"), require_path(checkpoint, "--checkpoint"), o, m);
    } else {
      summary = run_filter(cfg, pages, pairs, prompts, o, m);
    }
    m.outputs = o.files();
    m.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_text_file(o.dir() / "manifest.json", m.to_json().dump(2) + "\n");
    out << json{{"subcommand", name},
                {"out", o.dir().string()},
                {"config_hash", m.config_hash},
                {"summary", summary}}
               .dump(2)
        << "\n";
    return kExitOk;
  } catch (const UsageError &e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return kExitDomain;
  }
}

}  // namespace lingogap::cli
