// SPDX-License-Identifier: Apache-2.0
#include "lingogap/synthtask.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <unordered_map>

#include "json_util.hpp"

namespace lingogap {

using json = nlohmann::ordered_json;

namespace {

constexpr std::array<std::string_view, 4> kQaSuffix = {"ss", "st", "ts", "tt"};
constexpr int kMaxImageAttempts = 10000;

int uniform(std::mt19937_64 &rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

}  // namespace

void TaskSpec::validate() const {
  if (num_keys <= 0) throw ConfigError("num_keys must be positive");
  if (num_values <= 0) throw ConfigError("num_values must be positive");
  if (template_len < 0) throw ConfigError("template_len must be >= 0");
  if (num_fillers < 0) throw ConfigError("num_fillers must be >= 0");
  if (facts_per_image <= 0) throw ConfigError("facts_per_image must be positive");
  if (facts_per_image > num_keys)
    throw ConfigError("facts_per_image exceeds num_keys");
  if (grid_width < 2 || grid_height < 1)
    throw ConfigError("grid must be at least 2 cells wide and 1 tall");
  if (facts_per_image > grid_height * (grid_width / 2))
    throw ConfigError("grid " + std::to_string(grid_width) + "x" +
                      std::to_string(grid_height) + " cannot hold " +
                      std::to_string(facts_per_image) + " key-value pairs");
  if (!(filler_prob >= 0.0 && filler_prob <= 1.0))
    throw ConfigError("filler_prob must lie in [0, 1]");
  if (split_sizes.train < 0 || split_sizes.val < 0 || split_sizes.test < 0)
    throw ConfigError("split sizes must be >= 0");
}

BilingualLexicon::BilingualLexicon(int size, std::vector<int> bijection)
    : bijection_(std::move(bijection)) {
  if (size <= 0) throw InvariantError("size", "lexicon must be non-empty");
  if (static_cast<int>(bijection_.size()) != size)
    throw InvariantError("bijection", "size mismatch");
  inverse_.assign(size, -1);
  for (int i = 0; i < size; ++i) {
    const int j = bijection_[i];
    if (j < 0 || j >= size || inverse_[j] != -1)
      throw InvariantError("bijection", "not a permutation");
    inverse_[j] = i;
  }
  for (int i = 0; i < size; ++i) {
    src_.push_back(kNumSpecialTokens + i);
    tgt_.push_back(kNumSpecialTokens + size + i);
  }
}

BilingualLexicon BilingualLexicon::for_task(const TaskSpec &spec) {
  spec.validate();
  const int n = spec.source_vocab_size();
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
  std::shuffle(perm.begin(), perm.end(), rng);
  return BilingualLexicon(n, std::move(perm));
}

bool BilingualLexicon::is_src(TokenId t) const noexcept {
  return t >= kNumSpecialTokens && t < kNumSpecialTokens + size();
}

bool BilingualLexicon::is_tgt(TokenId t) const noexcept {
  return t >= kNumSpecialTokens + size() && t < kNumSpecialTokens + 2 * size();
}

TokenId BilingualLexicon::to_tgt(TokenId src) const {
  if (is_tgt(src)) return src;
  if (!is_src(src)) throw DomainError("token " + std::to_string(src) +
                                      " is not in the source vocabulary");
  return tgt_[bijection_[src - kNumSpecialTokens]];
}

TokenId BilingualLexicon::to_src(TokenId tgt) const {
  if (is_src(tgt)) return tgt;
  if (!is_tgt(tgt)) throw DomainError("token " + std::to_string(tgt) +
                                      " is not in the target vocabulary");
  return src_[inverse_[tgt - kNumSpecialTokens - size()]];
}

Tokens BilingualLexicon::map(const Tokens &tokens,
                             const LanguageTag &lang) const {
  const bool to_target = lang == target_lang();
  if (!to_target && lang != source_lang())
    throw DomainError("lexicon has no language '" + lang.code() + "'");
  Tokens out;
  out.reserve(tokens.size());
  for (TokenId t : tokens) {
    if (!is_src(t) && !is_tgt(t))
      out.push_back(t);
    else
      out.push_back(to_target ? to_tgt(t) : to_src(t));
  }
  return out;
}

Tokens render_question(TokenId key, const LanguageTag &lang,
                       const BilingualLexicon &lex, const TaskSpec &spec) {
  const TaskVocabulary voc{spec};
  if (key < voc.key_token(0) || key >= voc.key_token(spec.num_keys))
    throw DomainError("render_question: token " + std::to_string(key) +
                      " is not a key");
  Tokens q;
  for (int i = 0; i < spec.template_len; ++i) q.push_back(voc.template_token(i));
  q.push_back(key);
  return lex.map(q, lang);
}

TokenId bos_for(const LanguageTag &answer_lang) {
  if (answer_lang == source_lang()) return kBosSrcToken;
  if (answer_lang == target_lang()) return kBosTgtToken;
  throw DomainError("no BOS token for language '" + answer_lang.code() + "'");
}

namespace {

struct RenderedImage {
  std::vector<int> cells;
  TokenId asked_key;
  TokenId answer;
};

std::optional<RenderedImage> try_render(const TaskSpec &spec,
                                        std::mt19937_64 &rng) {
  const TaskVocabulary voc{spec};
  const int w = spec.grid_width;
  const int h = spec.grid_height;
  std::vector<int> cells(w * h, 0);

  std::vector<int> keys(spec.num_keys);
  std::iota(keys.begin(), keys.end(), 0);
  for (int i = 0; i < spec.facts_per_image; ++i)
    std::swap(keys[i], keys[uniform(rng, i, spec.num_keys - 1)]);
  keys.resize(spec.facts_per_image);

  std::vector<TokenId> values;
  for (int k : keys) {
    std::vector<int> free;
    for (int r = 0; r < h; ++r)
      for (int c = 0; c + 1 < w; ++c)
        if (cells[r * w + c] == 0 && cells[r * w + c + 1] == 0)
          free.push_back(r * w + c);
    if (free.empty()) return std::nullopt;
    const int pos = free[uniform(rng, 0, static_cast<int>(free.size()) - 1)];
    const int v = uniform(rng, 0, spec.num_values - 1);
    cells[pos] = voc.glyph_of_source(voc.key_token(k));
    cells[pos + 1] = voc.glyph_of_source(voc.value_token(v));
    values.push_back(voc.value_token(v));
  }
  if (spec.num_fillers > 0) {
    std::bernoulli_distribution fill(spec.filler_prob);
    const TokenId first_filler = voc.template_token(spec.template_len);
    for (int &c : cells) {
      if (c != 0) continue;
      if (fill(rng))
        c = voc.glyph_of_source(first_filler +
                                uniform(rng, 0, spec.num_fillers - 1));
    }
  }
  const int asked = uniform(rng, 0, spec.facts_per_image - 1);
  return RenderedImage{std::move(cells), voc.key_token(keys[asked]),
                       values[asked]};
}

}  // namespace

DatasetSplits generate_dataset(const TaskSpec &spec,
                               const BilingualLexicon &lex) {
  spec.validate();
  if (lex.size() != spec.source_vocab_size())
    throw ConfigError("lexicon size does not match the task vocabulary");
  std::mt19937_64 rng(spec.seed);
  std::set<std::vector<int>> seen;
  DatasetSplits out;

  const auto fill_split = [&](const char *name, int count,
                              std::vector<VQASample> &dst) {
    for (int i = 0; i < count; ++i) {
      std::optional<RenderedImage> img;
      for (int attempt = 0; attempt < kMaxImageAttempts; ++attempt) {
        img = try_render(spec, rng);
        if (img && seen.insert(img->cells).second) break;
        img.reset();
      }
      if (!img)
        throw ConfigError("cannot render " + std::to_string(count) +
                          " distinct images for split " + name);
      char idbuf[32];
      std::snprintf(idbuf, sizeof idbuf, "%s-%05d", name, i);
      const GlyphImage image(spec.grid_width, spec.grid_height,
                             spec.glyph_vocab_size(), img->cells);
      for (std::size_t d = 0; d < 4; ++d) {
        const LanguageTag &ql = d < 2 ? source_lang() : target_lang();
        const LanguageTag &al = d % 2 == 0 ? source_lang() : target_lang();
        VQASample s{std::string(idbuf) + "/" + std::string(kQaSuffix[d]),
                    image,
                    render_question(img->asked_key, ql, lex, spec),
                    ql,
                    lex.map({img->answer}, al),
                    al,
                    QType::extractive};
        dst.push_back(std::move(s));
      }
    }
  };
  fill_split("train", spec.split_sizes.train, out.train);
  fill_split("val", spec.split_sizes.val, out.val);
  fill_split("test", spec.split_sizes.test, out.test);
  return out;
}

std::vector<ImageGroup> group_by_image(const std::vector<VQASample> &samples) {
  std::vector<ImageGroup> groups;
  std::unordered_map<std::string, std::size_t> where;
  std::vector<std::array<bool, 4>> filled;
  std::vector<std::size_t> first;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::string &id = samples[i].id;
    const auto slash = id.rfind('/');
    if (slash == std::string::npos)
      throw InvariantError("id", "sample id '" + id + "' has no direction suffix");
    const std::string image = id.substr(0, slash);
    const std::string_view suffix = std::string_view(id).substr(slash + 1);
    const auto it = std::find(kQaSuffix.begin(), kQaSuffix.end(), suffix);
    if (it == kQaSuffix.end())
      throw InvariantError("id", "unknown direction suffix in '" + id + "'");
    const auto d = static_cast<std::size_t>(it - kQaSuffix.begin());
    auto [pos, inserted] = where.try_emplace(image, groups.size());
    if (inserted) {
      groups.push_back({image, {}});
      filled.push_back({false, false, false, false});
    }
    if (filled[pos->second][d])
      throw InvariantError("id", "duplicate sample id '" + id + "'");
    if (inserted) first.push_back(i);
    if (samples[first[pos->second]].image != samples[i].image)
      throw InvariantError("image", "variants of " + image + " differ");
    groups[pos->second].index[d] = i;
    filled[pos->second][d] = true;
  }
  for (std::size_t g = 0; g < groups.size(); ++g)
    for (std::size_t d = 0; d < 4; ++d)
      if (!filled[g][d])
        throw InvariantError("id", groups[g].image_id + " lacks variant " +
                                       std::string(kQaSuffix[d]));
  return groups;
}

std::string lexicon_to_json(const BilingualLexicon &lex, const TaskSpec &spec) {
  const TaskVocabulary voc{spec};
  json roles = json::array();
  for (int i = 0; i < lex.size(); ++i) {
    const TokenId t = lex.src_tokens()[i];
    const char *role = t < voc.value_token(0)      ? "key"
                       : t < voc.template_token(0) ? "value"
                       : t < voc.template_token(spec.template_len) ? "template"
                                                                   : "filler";
    roles.push_back(role);
  }
  json j;
  j["v"] = kRecordVersion;
  j["source_lang"] = source_lang().code();
  j["target_lang"] = target_lang().code();
  j["size"] = lex.size();
  j["src_tokens"] = lex.src_tokens();
  j["tgt_tokens"] = lex.tgt_tokens();
  j["bijection"] = lex.bijection();
  j["roles"] = roles;
  return j.dump(2) + "\n";
}

BilingualLexicon lexicon_from_json(std::string_view text) {
  const json j = detail::parse_record(text);
  detail::check_version(j);
  return BilingualLexicon(detail::get<int>(j, "size"),
                          detail::get<std::vector<int>>(j, "bijection"));
}

std::string task_spec_to_json(const TaskSpec &s) {
  json j;
  j["num_keys"] = s.num_keys;
  j["num_values"] = s.num_values;
  j["facts_per_image"] = s.facts_per_image;
  j["grid_width"] = s.grid_width;
  j["grid_height"] = s.grid_height;
  j["template_len"] = s.template_len;
  j["num_fillers"] = s.num_fillers;
  j["filler_prob"] = s.filler_prob;
  j["seed"] = s.seed;
  j["split_sizes"] = {{"train", s.split_sizes.train},
                      {"val", s.split_sizes.val},
                      {"test", s.split_sizes.test}};
  return j.dump();
}

TaskSpec task_spec_from_json(std::string_view text) {
  const json j = detail::parse_record(text);
  detail::reject_unknown_keys(j, {"v", "num_keys", "num_values", "facts_per_image",
                                  "grid_width", "grid_height", "template_len",
                                  "num_fillers", "filler_prob", "seed", "split_sizes"},
                              "task spec");
  TaskSpec s;
  s.num_keys = detail::get_or(j, "num_keys", s.num_keys);
  s.num_values = detail::get_or(j, "num_values", s.num_values);
  s.facts_per_image = detail::get_or(j, "facts_per_image", s.facts_per_image);
  s.grid_width = detail::get_or(j, "grid_width", s.grid_width);
  s.grid_height = detail::get_or(j, "grid_height", s.grid_height);
  s.template_len = detail::get_or(j, "template_len", s.template_len);
  s.num_fillers = detail::get_or(j, "num_fillers", s.num_fillers);
  s.filler_prob = detail::get_or(j, "filler_prob", s.filler_prob);
  s.seed = detail::get_or(j, "seed", s.seed);
  if (j.contains("split_sizes")) {
    const json &sp = j["split_sizes"];
    detail::reject_unknown_keys(sp, {"train", "val", "test"}, "split_sizes");
    s.split_sizes.train = detail::get_or(sp, "train", s.split_sizes.train);
    s.split_sizes.val = detail::get_or(sp, "val", s.split_sizes.val);
    s.split_sizes.test = detail::get_or(sp, "test", s.split_sizes.test);
  }
  s.validate();
  return s;
}

}  // namespace lingogap
