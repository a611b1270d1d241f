// SPDX-License-Identifier: Apache-2.0
#include "lingogap/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <unordered_map>

#include "json_util.hpp"
#include "lingogap/hash.hpp"
#include "lingogap/objective.hpp"
#include "parallel.hpp"

namespace lingogap {

using json = nlohmann::ordered_json;

std::optional<TokenId> LexiconTranslator::to_language(
    TokenId t, const LanguageTag &lang) const {
  if (!lex_.is_src(t) && !lex_.is_tgt(t)) return std::nullopt;
  if (lang == source_lang()) return lex_.to_src(t);
  if (lang == target_lang()) return lex_.to_tgt(t);
  return std::nullopt;
}

NormalizedAnswer normalize_answer(const Tokens &pred,
                                  const LanguageTag &target_lang,
                                  const Translator &translator) {
  NormalizedAnswer out;
  out.tokens.reserve(pred.size());
  for (TokenId t : pred) {
    if (auto mapped = translator.to_language(t, target_lang)) {
      out.tokens.push_back(*mapped);
    } else {
      out.tokens.push_back(t);
      out.warning = true;
    }
  }
  return out;
}

double token_f1(const Tokens &pred, const Tokens &gold) {
  if (pred.empty() && gold.empty()) return 1.0;
  if (pred.empty() || gold.empty()) return 0.0;
  std::unordered_map<TokenId, std::size_t> counts;
  for (TokenId t : gold) ++counts[t];
  std::size_t overlap = 0;
  for (TokenId t : pred) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  if (overlap == 0) return 0.0;
  const double p = static_cast<double>(overlap) / static_cast<double>(pred.size());
  const double r = static_cast<double>(overlap) / static_cast<double>(gold.size());
  return 2.0 * p * r / (p + r);
}

std::vector<EvalResult> evaluate_model(const std::vector<VQASample> &samples,
                                       const ToyModel &model,
                                       const ModelState &state,
                                       const Translator &translator,
                                       const LanguageTag &reference_lang,
                                       int workers) {
  model.check_state(state);
  std::vector<EvalResult> out(samples.size());
  detail::parallel_for(samples.size(), workers, [&](std::size_t i) {
    const VQASample &s = samples[i];
    const Generation g =
        model.answer(s.image, s.question, bos_for(s.answer_lang), state);
    EvalResult r;
    r.sample_id = s.id;
    r.predicted = g.answer(model.config().eos);
    const NormalizedAnswer pred = normalize_answer(r.predicted, reference_lang, translator);
    const NormalizedAnswer gold = normalize_answer(s.gold_answer, reference_lang, translator);
    r.normalized = pred.tokens;
    r.normalization_warning = pred.warning;
    r.correct = pred.tokens == gold.tokens;
    r.f1 = token_f1(pred.tokens, gold.tokens);
    r.question_lang = s.question_lang.code();
    r.answer_lang = s.answer_lang.code();
    r.qtype = s.qtype;
    out[i] = std::move(r);
  });
  return out;
}

std::string serialize_eval_result(const EvalResult &r) {
  json j;
  j["v"] = kRecordVersion;
  j["sample_id"] = r.sample_id;
  j["question_lang"] = r.question_lang;
  j["answer_lang"] = r.answer_lang;
  j["qtype"] = std::string(to_string(r.qtype));
  j["predicted"] = r.predicted;
  j["normalized"] = r.normalized;
  j["correct"] = r.correct;
  j["f1"] = r.f1;
  j["normalization_warning"] = r.normalization_warning;
  return j.dump();
}

double DirectionAccuracy::mono() const {
  return 0.5 * (acc[static_cast<std::size_t>(Direction::ss)] +
                acc[static_cast<std::size_t>(Direction::st)]);
}

double DirectionAccuracy::cross() const {
  return 0.5 * (acc[static_cast<std::size_t>(Direction::ts)] +
                acc[static_cast<std::size_t>(Direction::tt)]);
}

DirectionAccuracy direction_accuracy(const std::vector<EvalResult> &results) {
  std::array<std::size_t, 4> n{}, c{};
  for (const auto &r : results) {
    const bool qs = r.question_lang == source_lang().code();
    const bool as = r.answer_lang == source_lang().code();
    const std::size_t d = (qs ? 0 : 2) + (as ? 0 : 1);
    ++n[d];
    if (r.correct) ++c[d];
  }
  DirectionAccuracy a;
  a.samples = results.size();
  for (std::size_t d = 0; d < 4; ++d)
    a.acc[d] = n[d] == 0 ? 0.0 : static_cast<double>(c[d]) / static_cast<double>(n[d]);
  return a;
}

double GapCell::accuracy() const {
  return n == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(n);
}

double GapCell::f1() const {
  return n == 0 ? 0.0 : f1_sum / static_cast<double>(n);
}

const GapRow *GapTable::row(const std::string &lang) const {
  for (const auto &r : rows)
    if (r.lang == lang) return &r;
  return nullptr;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string GapTable::to_tsv() const {
  std::string out = "lang\tqtype\tn\taccuracy\tf1\n";
  for (const auto &r : rows) {
    for (const auto &[q, cell] : r.by_qtype)
      out += r.lang + "\t" + std::string(to_string(q)) + "\t" +
             std::to_string(cell.n) + "\t" + fmt(cell.accuracy()) + "\t" +
             fmt(cell.f1()) + "\n";
    out += r.lang + "\tall\t" + std::to_string(r.overall.n) + "\t" +
           fmt(r.overall.accuracy()) + "\t" + fmt(r.overall.f1()) + "\n";
  }
  out += "\nreference\tlang\tabsolute_gap\trelative_gap_pct\n";
  for (const auto &g : gaps)
    out += reference_lang + "\t" + g.lang + "\t" + fmt(g.absolute) + "\t" +
           fmt(g.relative_pct) + "\n";
  return out;
}

GapTable gap_table(const std::vector<EvalResult> &results,
                   const std::string &reference_lang,
                   const std::vector<std::string> &expected_langs) {
  std::map<std::string, GapRow> by_lang;
  for (const auto &r : results) {
    GapRow &row = by_lang[r.question_lang];
    row.lang = r.question_lang;
    GapCell &cell = row.by_qtype[r.qtype];
    ++cell.n;
    if (r.correct) ++cell.correct;
    cell.f1_sum += r.f1;
  }
  GapTable t;
  t.reference_lang = reference_lang;
  for (const auto &lang : expected_langs)
    if (!by_lang.count(lang))
      t.warnings.push_back("language " + lang + " has no samples; omitted");
  const auto ref = by_lang.find(reference_lang);
  if (ref == by_lang.end())
    throw DomainError("gap_table: reference language " + reference_lang +
                      " has no samples");
  if (by_lang.size() < 2)
    t.warnings.push_back("fewer than two question languages; no gap rows");
  for (auto &[lang, row] : by_lang) {
    for (const auto &[q, cell] : row.by_qtype) {
      row.overall.n += cell.n;
      row.overall.correct += cell.correct;
      row.overall.f1_sum += cell.f1_sum;
    }
  }
  t.rows.push_back(ref->second);
  for (const auto &[lang, row] : by_lang)
    if (lang != reference_lang) t.rows.push_back(row);
  const double acc_ref = ref->second.overall.accuracy();
  for (std::size_t i = 1; i < t.rows.size(); ++i) {
    GapEntry g;
    g.lang = t.rows[i].lang;
    g.absolute = acc_ref - t.rows[i].overall.accuracy();
    if (acc_ref > 0.0) {
      g.relative_pct = g.absolute / acc_ref * 100.0;
    } else {
      t.warnings.push_back("reference accuracy is 0; relative gap for " +
                           g.lang + " set to 0");
    }
    t.gaps.push_back(g);
  }
  return t;
}

NoiseSpec default_noise_spec(const ToyModel &model, const ModelState &state,
                             std::uint64_t seed, double sigma_multiplier) {
  NoiseSpec n;
  n.mean = 0.0;
  n.stddev = sigma_multiplier * model.glyph_embedding_stddev(state);
  n.seed = seed;
  return n;
}

std::vector<MIReport> analyze_mi(const std::vector<VQASample> &samples,
                                 const ToyModel &model, const ModelState &state,
                                 const Translator &translator,
                                 const LanguageTag &reference_lang,
                                 const NoiseSpec &noise, int workers) {
  noise.validate();
  model.check_state(state);
  std::vector<MIReport> out(samples.size());
  detail::parallel_for(samples.size(), workers, [&](std::size_t i) {
    const VQASample &s = samples[i];
    const TokenId bos = bos_for(s.answer_lang);
    const VisualTokens encoded = model.encode_image(s.image, state);
    const Generation g = model.generate(model.project(encoded, state), s.question,
                                        bos, state, model.config().max_answer_len);
    NoiseSpec per = noise;
    per.seed = noise.seed ^ fnv1a64(s.id);
    const VisualTokens noisy = model.project(noise_augment(encoded, per), state);
    const SequenceDistribution uncond =
        model.decode_distributions(noisy, s.question, bos, g.tokens, state);
    MIReport r = mutual_information(g.dist, uncond);
    r.sample_id = s.id;
    r.question_lang = s.question_lang.code();
    const Tokens pred = normalize_answer(g.answer(model.config().eos),
                                         reference_lang, translator).tokens;
    const Tokens gold = normalize_answer(s.gold_answer, reference_lang, translator).tokens;
    r.correct = pred == gold;
    out[i] = std::move(r);
  });
  return out;
}

std::optional<double> LanguageMISummary::separation() const {
  if (!pooled_se || *pooled_se <= 0.0) return std::nullopt;
  return (incorrect.mean - correct.mean) / *pooled_se;
}

const LanguageMISummary *MISummary::language(const std::string &lang) const {
  for (const auto &l : languages)
    if (l.lang == lang) return &l;
  return nullptr;
}

double pearson(const std::vector<double> &x, const std::vector<double> &y) {
  if (x.size() != y.size() || x.size() < 2)
    throw DomainError("pearson: need two equal-length series of size >= 2");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0)
    throw DomainError("pearson: zero variance series");
  return sxy / std::sqrt(sxx * syy);
}

namespace {

EntropyGroup summarize(const std::vector<double> &xs) {
  EntropyGroup g;
  g.n = xs.size();
  if (xs.empty()) return g;
  for (double x : xs) g.mean += x;
  g.mean /= static_cast<double>(xs.size());
  if (xs.size() >= 2) {
    for (double x : xs) g.variance += (x - g.mean) * (x - g.mean);
    g.variance /= static_cast<double>(xs.size() - 1);
  }
  return g;
}

std::size_t bin_of(double v, const std::vector<double> &edges) {
  const std::size_t bins = edges.size() - 1;
  const double width = (edges.back() - edges.front()) / static_cast<double>(bins);
  auto b = static_cast<std::size_t>(std::floor((v - edges.front()) / width));
  return std::min(b, bins - 1);
}

}  // namespace

MISummary mi_accuracy_report(const std::vector<MIReport> &reports,
                             std::size_t bins) {
  if (bins == 0) throw DomainError("mi_accuracy_report: bins must be > 0");
  MISummary out;
  double hmax = 0.0;
  for (const auto &r : reports) hmax = std::max(hmax, r.h_cond_per_token());
  if (hmax <= 0.0) hmax = 1.0;
  out.bin_edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i)
    out.bin_edges[i] = hmax * static_cast<double>(i) / static_cast<double>(bins);

  std::map<std::string, std::vector<const MIReport *>> by_lang;
  for (const auto &r : reports) by_lang[r.question_lang].push_back(&r);
  for (const auto &[lang, rs] : by_lang) {
    LanguageMISummary s;
    s.lang = lang;
    s.n = rs.size();
    s.hist_correct.assign(bins, 0);
    s.hist_incorrect.assign(bins, 0);
    std::vector<double> hc, hi;
    for (const MIReport *r : rs) {
      const double h = r->h_cond_per_token();
      s.mean_mi += r->mi_per_token();
      s.mean_h_cond += h;
      s.mean_h_uncond += r->h_uncond_per_token();
      if (r->correct) {
        ++s.n_correct;
        hc.push_back(h);
        ++s.hist_correct[bin_of(h, out.bin_edges)];
      } else {
        hi.push_back(h);
        ++s.hist_incorrect[bin_of(h, out.bin_edges)];
      }
    }
    const auto n = static_cast<double>(s.n);
    s.mean_mi /= n;
    s.mean_h_cond /= n;
    s.mean_h_uncond /= n;
    s.accuracy = static_cast<double>(s.n_correct) / n;
    s.correct = summarize(hc);
    s.incorrect = summarize(hi);
    const std::size_t n1 = s.correct.n, n2 = s.incorrect.n;
    if (n1 >= 1 && n2 >= 1 && n1 + n2 > 2) {
      const double sp2 = ((n1 - 1) * s.correct.variance +
                          (n2 - 1) * s.incorrect.variance) /
                         static_cast<double>(n1 + n2 - 2);
      s.pooled_se = std::sqrt(sp2 * (1.0 / n1 + 1.0 / n2));
    } else {
      out.warnings.push_back("language " + lang +
                             ": pooled standard error undefined");
    }
    out.languages.push_back(std::move(s));
  }
  if (out.languages.size() >= 2) {
    std::vector<double> mi, acc;
    for (const auto &l : out.languages) {
      mi.push_back(l.mean_mi);
      acc.push_back(l.accuracy);
    }
    try {
      out.correlation = pearson(mi, acc);
    } catch (const DomainError &) {
      out.warnings.push_back("correlation undefined: zero variance across languages");
    }
  } else {
    out.warnings.push_back("fewer than two languages; correlation omitted");
  }
  return out;
}

std::string MISummary::to_json() const {
  json j;
  j["v"] = kRecordVersion;
  j["bin_edges"] = bin_edges;
  json langs = json::array();
  const auto group = [](const EntropyGroup &g) {
    return json{{"n", g.n}, {"mean", g.mean}, {"variance", g.variance}};
  };
  for (const auto &l : languages) {
    json x;
    x["lang"] = l.lang;
    x["n"] = l.n;
    x["n_correct"] = l.n_correct;
    x["accuracy"] = l.accuracy;
    x["mean_mi_per_token"] = l.mean_mi;
    x["mean_h_cond_per_token"] = l.mean_h_cond;
    x["mean_h_uncond_per_token"] = l.mean_h_uncond;
    x["h_cond_correct"] = group(l.correct);
    x["h_cond_incorrect"] = group(l.incorrect);
    x["pooled_se"] = l.pooled_se ? json(*l.pooled_se) : json(nullptr);
    const auto sep = l.separation();
    x["separation_in_se"] = sep ? json(*sep) : json(nullptr);
    x["hist_correct"] = l.hist_correct;
    x["hist_incorrect"] = l.hist_incorrect;
    langs.push_back(std::move(x));
  }
  j["languages"] = std::move(langs);
  j["correlation_mi_accuracy"] = correlation ? json(*correlation) : json(nullptr);
  j["warnings"] = warnings;
  return j.dump(2) + "\n";
}

}  // namespace lingogap
