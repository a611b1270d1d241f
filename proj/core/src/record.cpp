// SPDX-License-Identifier: Apache-2.0
#include "lingogap/record.hpp"

#include <fstream>
#include <sstream>

#include "json_util.hpp"

namespace lingogap {

using json = nlohmann::ordered_json;

std::string serialize_sample(const VQASample &s) {
  s.validate();
  json j;
  j["v"] = kRecordVersion;
  j["id"] = s.id;
  j["qtype"] = std::string(to_string(s.qtype));
  j["question_lang"] = s.question_lang.code();
  j["question"] = s.question;
  j["answer_lang"] = s.answer_lang.code();
  j["gold_answer"] = s.gold_answer;
  j["image"] = {{"width", s.image.width()},
                {"height", s.image.height()},
                {"glyph_vocab", s.image.glyph_vocab_size()},
                {"cells", s.image.cells()}};
  return j.dump();
}

VQASample deserialize_sample(std::string_view record) {
  const json j = detail::parse_record(record);
  detail::check_version(j);
  const json &img = detail::field(j, "image");
  GlyphImage image(detail::get<int>(img, "width"), detail::get<int>(img, "height"),
                   detail::get<int>(img, "glyph_vocab"),
                   detail::get<std::vector<int>>(img, "cells"));
  VQASample s{
      detail::get<std::string>(j, "id"),
      std::move(image),
      detail::get<Tokens>(j, "question"),
      LanguageTag(detail::get<std::string>(j, "question_lang")),
      detail::get<Tokens>(j, "gold_answer"),
      LanguageTag(detail::get<std::string>(j, "answer_lang")),
      qtype_from_string(detail::get<std::string>(j, "qtype")),
  };
  s.validate();
  return s;
}

std::string serialize_mi_report(const MIReport &r) {
  r.validate();
  json j;
  j["v"] = kRecordVersion;
  j["sample_id"] = r.sample_id;
  j["question_lang"] = r.question_lang;
  j["length"] = r.length;
  j["h_uncond"] = r.h_uncond;
  j["h_cond"] = r.h_cond;
  j["mi"] = r.mi;
  j["correct"] = r.correct;
  return j.dump();
}

MIReport deserialize_mi_report(std::string_view record) {
  const json j = detail::parse_record(record);
  detail::check_version(j);
  MIReport r;
  r.sample_id = detail::get<std::string>(j, "sample_id");
  r.question_lang = detail::get<std::string>(j, "question_lang");
  r.length = detail::get<std::size_t>(j, "length");
  r.h_uncond = detail::get<double>(j, "h_uncond");
  r.h_cond = detail::get<double>(j, "h_cond");
  r.mi = detail::get<double>(j, "mi");
  r.correct = detail::get<bool>(j, "correct");
  r.validate();
  return r;
}

std::vector<std::string> read_lines(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

void write_lines(const std::filesystem::path &path,
                 const std::vector<std::string> &lines) {
  std::string text;
  for (const auto &l : lines) {
    text += l;
    text += '\n';
  }
  write_text_file(path, text);
}

std::string read_text_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path &path, std::string_view text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create " + path.parent_path().string());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<VQASample> read_samples(const std::filesystem::path &path) {
  std::vector<VQASample> out;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    try {
      out.push_back(deserialize_sample(lines[i]));
    } catch (const ParseError &e) {
      throw ParseError(e.position(), path.string() + " line " +
                                         std::to_string(i + 1) + ": " + e.what());
    } catch (const InvariantError &e) {
      throw InvariantError(e.field(), path.string() + " line " +
                                          std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

void write_samples(const std::filesystem::path &path,
                   const std::vector<VQASample> &samples) {
  std::vector<std::string> lines;
  lines.reserve(samples.size());
  for (const auto &s : samples) lines.push_back(serialize_sample(s));
  write_lines(path, lines);
}

}  // namespace lingogap
