// SPDX-License-Identifier: Apache-2.0
#include "lingogap/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <unordered_map>
#include <variant>

#include "json_util.hpp"
#include "lingogap/record.hpp"

namespace lingogap {

using json = nlohmann::ordered_json;

void CandidateQAPair::validate() const {
  if (id.empty()) throw InvariantError("id", "must be non-empty");
  if (question.empty()) throw InvariantError("question", "must be non-empty");
  if (answer.empty()) throw InvariantError("answer", "must be non-empty");
  if (confidence < 1 || confidence > 10)
    throw InvariantError("confidence", "must be in [1, 10], got " + std::to_string(confidence));
  if (lang.empty()) throw InvariantError("lang", "must be non-empty");
}

std::string serialize_pair(const CandidateQAPair &p) {
  p.validate();
  json j;
  j["v"] = kRecordVersion;
  j["id"] = p.id;
  j["qtype"] = std::string(to_string(p.qtype));
  j["lang"] = p.lang;
  j["source_page_id"] = p.source_page_id;
  j["question"] = p.question;
  j["answer"] = p.answer;
  j["confidence"] = p.confidence;
  return j.dump();
}

CandidateQAPair deserialize_pair(std::string_view line) {
  const json j = detail::parse_record(line);
  detail::check_version(j);
  CandidateQAPair p;
  p.id = detail::get<std::string>(j, "id");
  p.qtype = qtype_from_string(detail::get<std::string>(j, "qtype"));
  p.lang = detail::get<std::string>(j, "lang");
  p.source_page_id = detail::get_or<std::string>(j, "source_page_id", "");
  p.question = detail::get<std::string>(j, "question");
  p.answer = detail::get<std::string>(j, "answer");
  p.confidence = detail::get<int>(j, "confidence");
  p.validate();
  return p;
}

std::vector<CandidateQAPair> read_pairs(const std::filesystem::path &path) {
  std::vector<CandidateQAPair> out;
  std::size_t n = 0;
  for (const auto &line : read_lines(path)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(deserialize_pair(line));
    } catch (const ParseError &e) {
      throw ParseError(e.position(), path.string() + ":" + std::to_string(n) + ": " + e.what());
    } catch (const InvariantError &e) {
      throw InvariantError(e.field(), path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

void write_pairs(const std::filesystem::path &path,
                 const std::vector<CandidateQAPair> &pairs) {
  std::vector<std::string> lines;
  lines.reserve(pairs.size());
  for (const auto &p : pairs) lines.push_back(serialize_pair(p));
  write_lines(path, lines);
}

std::string serialize_quarantine(const QuarantineRecord &q) {
  json j;
  j["v"] = kRecordVersion;
  j["kind"] = "quarantine";
  j["source_page_id"] = q.source_page_id;
  j["qtype"] = std::string(to_string(q.qtype));
  j["lang"] = q.lang;
  j["reason"] = q.reason;
  j["raw"] = q.raw;
  return j.dump();
}

std::vector<std::string> brace_segments(std::string_view text) {
  std::vector<std::string> out;
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"' && depth > 0) {
      in_string = true;
    } else if (c == '{') {
      if (depth == 0) start = i;
      ++depth;
    } else if (c == '}' && depth > 0) {
      if (--depth == 0) out.emplace_back(text.substr(start, i - start + 1));
    }
  }
  if (depth > 0) out.emplace_back(text.substr(start));
  return out;
}

namespace {

std::string trim(std::string s) {
  const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
  while (!s.empty() && ws(s.back())) s.pop_back();
  std::size_t b = 0;
  while (b < s.size() && ws(s[b])) ++b;
  return s.substr(b);
}

/// The text of a question or answer field; numbers and booleans are
/// accepted and rendered.
std::optional<std::string> text_field(const json &j, const char *name) {
  auto it = j.find(name);
  if (it == j.end()) return std::nullopt;
  std::string s;
  if (it->is_string()) {
    s = it->get<std::string>();
  } else if (it->is_boolean()) {
    s = it->get<bool>() ? "yes" : "no";
  } else if (it->is_number()) {
    s = it->dump();
  } else {
    return std::nullopt;
  }
  s = trim(std::move(s));
  if (s.empty()) return std::nullopt;
  return s;
}

std::optional<int> score_field(const json &j, const char *name) {
  auto it = j.find(name);
  if (it == j.end()) return std::nullopt;
  double v = 0.0;
  if (it->is_number()) {
    v = it->get<double>();
  } else if (it->is_string()) {
    try {
      std::size_t used = 0;
      const std::string s = trim(it->get<std::string>());
      v = std::stod(s, &used);
      if (used != s.size()) return std::nullopt;
    } catch (const std::exception &) {
      return std::nullopt;
    }
  } else {
    return std::nullopt;
  }
  if (v != std::floor(v) || v < 1 || v > 10) return std::nullopt;
  return static_cast<int>(v);
}

struct ParsedRecord {
  std::string question;
  std::string answer;
  int confidence = 0;
};

/// Either a record or the reason it was rejected.
std::variant<ParsedRecord, std::string> parse_qa(const std::string &segment) {
  json j;
  try {
    j = json::parse(segment);
  } catch (const json::exception &) {
    return std::string("not valid JSON");
  }
  if (!j.is_object()) return std::string("not a JSON object");
  auto q = text_field(j, "question");
  if (!q) return std::string("missing or empty question");
  auto a = text_field(j, "answer");
  if (!a) return std::string("missing or empty answer");
  auto c = score_field(j, "confidence");
  if (!c) return std::string("confidence missing or not an integer in [1, 10]");
  return ParsedRecord{*q, *a, *c};
}

}  // namespace

GenerationResult generate_candidates(const std::string &page_id,
                                     const std::string &page_text, QType qtype,
                                     const std::string &lang, QaClient &qa,
                                     const PromptBundle &prompts) {
  const std::string prompt = prompts.generation_prompt(qtype, lang, page_text);
  const std::string reply = qa.complete(prompt);
  GenerationResult out;
  const auto segments = brace_segments(reply);
  if (segments.empty()) {
    out.quarantined.push_back({page_id, qtype, lang, reply, "no record in response"});
  }
  for (const auto &seg : segments) {
    auto parsed = parse_qa(seg);
    if (auto *reason = std::get_if<std::string>(&parsed)) {
      out.quarantined.push_back({page_id, qtype, lang, seg, *reason});
      continue;
    }
    auto &r = std::get<ParsedRecord>(parsed);
    CandidateQAPair p;
    p.id = page_id + "/" + std::string(to_string(qtype)) + "/" + lang + "/" +
           std::to_string(out.pairs.size());
    p.question = std::move(r.question);
    p.answer = std::move(r.answer);
    p.confidence = r.confidence;
    p.qtype = qtype;
    p.source_page_id = page_id;
    p.lang = lang;
    out.pairs.push_back(std::move(p));
  }
  if (!out.quarantined.empty())
    out.warnings.push_back(page_id + ": " + std::to_string(out.quarantined.size()) +
                           " response segment(s) quarantined");
  return out;
}

void FilterThresholds::validate() const {
  if (min_confidence < 1 || min_confidence > 10)
    throw ConfigError("min_confidence must be in [1, 10]");
  if (!(max_jaccard >= 0.0 && max_jaccard <= 1.0))
    throw ConfigError("max_jaccard must be in [0, 1]");
  if (!(max_normalized_edit >= 0.0 && max_normalized_edit <= 1.0))
    throw ConfigError("max_normalized_edit must be in [0, 1]");
  if (min_consistency_score < 1 || min_consistency_score > 10)
    throw ConfigError("min_consistency_score must be in [1, 10]");
}

bool FilterStats::monotone() const {
  return origin >= post_confidence && post_confidence >= post_similarity &&
         post_similarity >= post_consistency && post_consistency >= final_count;
}

std::string FilterStats::to_json() const {
  json j;
  j["v"] = kRecordVersion;
  j["origin"] = origin;
  j["post_confidence"] = post_confidence;
  j["post_similarity"] = post_similarity;
  j["post_consistency"] = post_consistency;
  j["final"] = final_count;
  return j.dump(2) + "\n";
}

namespace {

json decision_json(const ConsistencyDecision &d) {
  json j;
  j["v"] = kRecordVersion;
  j["pair_id"] = d.pair_id;
  j["kept"] = d.kept;
  j["reanswer"] = d.reanswer;
  j["normalized_edit"] = d.normalized_edit;
  j["judge_score"] = d.judge_score ? json(*d.judge_score) : json(nullptr);
  j["reason"] = d.reason;
  return j;
}

ConsistencyDecision decision_from_json(const json &j) {
  ConsistencyDecision d;
  d.pair_id = detail::get<std::string>(j, "pair_id");
  d.kept = detail::get<bool>(j, "kept");
  d.reanswer = detail::get<std::string>(j, "reanswer");
  d.normalized_edit = detail::get<double>(j, "normalized_edit");
  if (!detail::field(j, "judge_score").is_null())
    d.judge_score = detail::get<int>(j, "judge_score");
  d.reason = detail::get<std::string>(j, "reason");
  return d;
}

std::map<std::string, ConsistencyDecision> load_decisions(
    const std::filesystem::path &path) {
  std::map<std::string, ConsistencyDecision> out;
  if (!std::filesystem::exists(path)) return out;
  for (const auto &line : read_lines(path)) {
    if (line.empty()) continue;
    json j;
    try {
      j = detail::parse_record(line);
    } catch (const ParseError &) {
      break;  // torn final line from an interrupted run
    }
    detail::check_version(j);
    ConsistencyDecision d = decision_from_json(j);
    out[d.pair_id] = std::move(d);
  }
  return out;
}

ConsistencyDecision check_consistency(const CandidateQAPair &p,
                                      const FilterThresholds &t,
                                      const ProviderSuite &providers,
                                      const PromptBundle &prompts) {
  ConsistencyDecision d;
  d.pair_id = p.id;
  std::string reply;
  try {
    const std::string content = providers.ocr->page_text(p.source_page_id);
    reply = providers.qa->complete(
        prompts.reanswer_prompt(p.qtype, p.lang, content, p.question));
  } catch (const ProviderError &e) {
    throw StageError(p.id, std::string("re-answer failed: ") + e.what());
  }
  std::optional<ParsedRecord> re;
  for (const auto &seg : brace_segments(reply)) {
    auto parsed = parse_qa(seg);
    if (auto *r = std::get_if<ParsedRecord>(&parsed)) {
      re = std::move(*r);
      break;
    }
  }
  if (!re) {
    d.reason = "unparseable re-answer";
    return d;
  }
  d.reanswer = re->answer;
  d.normalized_edit = normalized_edit_distance(p.answer, re->answer);
  if (d.normalized_edit <= t.max_normalized_edit) {
    d.kept = true;
    d.reason = "edit distance";
    return d;
  }
  std::string verdict;
  try {
    verdict = providers.qa->complete(prompts.consistency_prompt(
        p.lang, p.question, p.answer, p.confidence, re->answer, re->confidence));
  } catch (const ProviderError &e) {
    throw StageError(p.id, std::string("consistency judge failed: ") + e.what());
  }
  for (const auto &seg : brace_segments(verdict)) {
    json j;
    try {
      j = json::parse(seg);
    } catch (const json::exception &) {
      continue;
    }
    if (!j.is_object()) continue;
    if (auto s = score_field(j, "score")) {
      d.judge_score = *s;
      break;
    }
  }
  if (!d.judge_score) {
    d.reason = "unparseable judge reply";
  } else {
    d.kept = *d.judge_score >= t.min_consistency_score;
    d.reason = d.kept ? "judge" : "inconsistent";
  }
  return d;
}

}  // namespace

FilterResult run_filter_chain(const std::vector<CandidateQAPair> &pairs,
                              const FilterThresholds &thresholds,
                              const ProviderSuite &providers,
                              const PromptBundle &prompts,
                              const std::optional<std::filesystem::path> &checkpoint) {
  thresholds.validate();
  if (!providers.ocr || !providers.qa)
    throw ConfigError("filter chain needs ocr and qa providers");
  std::set<std::string> ids;
  for (const auto &p : pairs) {
    p.validate();
    if (!ids.insert(p.id).second) throw ConfigError("duplicate pair id " + p.id);
  }

  FilterResult res;
  res.stats.origin = pairs.size();

  std::vector<std::size_t> confident;
  for (std::size_t i = 0; i < pairs.size(); ++i)
    if (pairs[i].confidence >= thresholds.min_confidence) confident.push_back(i);
  res.stats.post_confidence = confident.size();

  std::vector<std::size_t> ranked = confident;
  std::sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) {
    if (pairs[a].confidence != pairs[b].confidence)
      return pairs[a].confidence > pairs[b].confidence;
    return pairs[a].id < pairs[b].id;
  });
  std::map<std::string, std::vector<TokenSet>> kept_sets;
  std::vector<char> distinct(pairs.size(), 0);
  for (std::size_t i : ranked) {
    const std::string scope =
        thresholds.dedup_scope == DedupScope::per_page ? pairs[i].source_page_id : "";
    auto &kept = kept_sets[scope];
    const TokenSet s = token_set(pairs[i].question);
    const bool similar = std::any_of(kept.begin(), kept.end(), [&](const TokenSet &k) {
      return jaccard(s, k) > thresholds.max_jaccard;
    });
    if (similar) continue;
    kept.push_back(s);
    distinct[i] = 1;
  }
  std::vector<std::size_t> survivors;
  for (std::size_t i : confident)
    if (distinct[i]) survivors.push_back(i);
  res.stats.post_similarity = survivors.size();

  std::map<std::string, ConsistencyDecision> done;
  std::ofstream log;
  if (checkpoint) {
    done = load_decisions(*checkpoint);
    if (checkpoint->has_parent_path())
      std::filesystem::create_directories(checkpoint->parent_path());
    log.open(*checkpoint, std::ios::app | std::ios::binary);
    if (!log) throw IoError("cannot open checkpoint " + checkpoint->string());
  }
  for (std::size_t i : survivors) {
    const CandidateQAPair &p = pairs[i];
    ConsistencyDecision d;
    if (auto it = done.find(p.id); it != done.end()) {
      d = it->second;
    } else {
      d = check_consistency(p, thresholds, providers, prompts);
      if (checkpoint) {
        log << decision_json(d).dump() << '\n';
        log.flush();
      }
    }
    if (d.kept) res.kept.push_back(p);
    res.decisions.push_back(std::move(d));
  }
  res.stats.post_consistency = res.kept.size();
  res.stats.final_count = res.kept.size();
  return res;
}

double backtranslation_score(const std::vector<std::string> &original,
                             const std::vector<std::string> &roundtrip,
                             EmbeddingClient &embedder) {
  if (original.empty()) throw DomainError("backtranslation_score: empty original");
  if (roundtrip.empty()) return 0.0;
  std::unordered_map<std::string, Embedding> cache;
  const auto emb = [&](const std::string &t) -> const Embedding & {
    auto it = cache.find(t);
    if (it == cache.end()) it = cache.emplace(t, embedder.embed(t)).first;
    return it->second;
  };
  double sum = 0.0;
  for (const auto &o : original) {
    double best = -1.0;
    for (const auto &r : roundtrip) best = std::max(best, cosine(emb(o), emb(r)));
    sum += best;
  }
  return sum / static_cast<double>(original.size());
}

std::string TranslationOutcome::review_record(const LanguageTag &src,
                                              const LanguageTag &tgt) const {
  json j;
  j["v"] = kRecordVersion;
  j["kind"] = "translation_review";
  j["src"] = src.code();
  j["tgt"] = tgt.code();
  j["original"] = original;
  j["translated"] = translated;
  j["back_translated"] = back_translated;
  j["score"] = score;
  j["accepted"] = accepted;
  return j.dump();
}

TranslationOutcome extend_multilingual(const std::string &question,
                                       const LanguageTag &src,
                                       const LanguageTag &tgt,
                                       TranslationClient &translator,
                                       EmbeddingClient &embedder,
                                       double threshold) {
  TranslationOutcome out;
  out.original = question;
  out.translated = translator.translate(question, src, tgt);
  out.back_translated = translator.translate(out.translated, tgt, src);
  out.score = backtranslation_score(word_tokens(question),
                                    word_tokens(out.back_translated), embedder);
  out.accepted = out.score >= threshold;
  return out;
}

}  // namespace lingogap
