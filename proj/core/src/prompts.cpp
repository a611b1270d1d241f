// SPDX-License-Identifier: Apache-2.0
#include "lingogap/prompts.hpp"

#include "lingogap/record.hpp"

namespace lingogap {

PromptBundle PromptBundle::load(const std::filesystem::path &dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec))
    throw IoError("prompt directory not found: " + dir.string());
  std::map<std::string, std::string> t;
  for (const auto &entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    t[entry.path().stem().string()] = read_text_file(entry.path());
  }
  if (t.empty()) throw IoError("no prompt templates in " + dir.string());
  return PromptBundle(std::move(t));
}

const std::string &PromptBundle::get(const std::string &name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) throw ConfigError("missing prompt template '" + name + "'");
  return it->second;
}

std::vector<std::string> PromptBundle::names() const {
  std::vector<std::string> out;
  for (const auto &[k, v] : templates_) out.push_back(k);
  return out;
}

std::string fill_all(std::string text, const std::string &slot,
                     const std::string &value) {
  std::size_t pos = text.find(slot);
  if (pos == std::string::npos) throw ConfigError("template lacks slot " + slot);
  while (pos != std::string::npos) {
    text.replace(pos, slot.size(), value);
    pos = text.find(slot, pos + value.size());
  }
  return text;
}

std::string fill_in_order(std::string text, const std::string &slot,
                          const std::vector<std::string> &values) {
  std::size_t pos = 0;
  std::size_t used = 0;
  while ((pos = text.find(slot, pos)) != std::string::npos) {
    if (used == values.size())
      throw ConfigError("template has more " + slot + " slots than values");
    text.replace(pos, slot.size(), values[used]);
    pos += values[used].size();
    ++used;
  }
  if (used != values.size())
    throw ConfigError("template has fewer " + slot + " slots than values");
  return text;
}

namespace {

std::string qtype_key(QType q) { return std::string(to_string(q)); }

}  // namespace

std::string PromptBundle::generation_prompt(QType q, const std::string &lang,
                                            const std::string &content) const {
  return fill_all(get("generate_" + qtype_key(q) + "_" + lang), kContentSlot, content);
}

std::string PromptBundle::reanswer_prompt(QType q, const std::string &lang,
                                          const std::string &content,
                                          const std::string &question) const {
  std::string t = get("reanswer_" + qtype_key(q) + "_" + lang);
  t = fill_all(std::move(t), kContentSlot, content);
  return fill_all(std::move(t), kQuestionSlot, question);
}

std::string PromptBundle::consistency_prompt(const std::string &lang,
                                             const std::string &question,
                                             const std::string &answer1,
                                             int confidence1,
                                             const std::string &answer2,
                                             int confidence2) const {
  std::string t = fill_all(get("consistency_" + lang), kQuestionSlot, question);
  t = fill_in_order(std::move(t), kAnswerSlot, {answer1, answer2});
  return fill_in_order(std::move(t), kConfidenceSlot,
                       {std::to_string(confidence1), std::to_string(confidence2)});
}

}  // namespace lingogap
