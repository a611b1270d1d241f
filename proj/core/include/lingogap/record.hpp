// SPDX-License-Identifier: Apache-2.0
/**
 * @file   record.hpp
 * @brief  Line-oriented (JSON Lines) record format for samples and reports.
 *
 * Sample record, one object per line, fields in this order:
 *   v, id, qtype, question_lang, question, answer_lang, gold_answer,
 *   image{width, height, glyph_vocab, cells}
 */
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "lingogap/types.hpp"

namespace lingogap {

inline constexpr int kRecordVersion = 1;

std::string serialize_sample(const VQASample &sample);
VQASample deserialize_sample(std::string_view record);

std::string serialize_mi_report(const MIReport &report);
MIReport deserialize_mi_report(std::string_view record);

/// Reads a JSONL file; blank lines are skipped. Errors carry the line number.
std::vector<VQASample> read_samples(const std::filesystem::path &path);
void write_samples(const std::filesystem::path &path,
                   const std::vector<VQASample> &samples);

std::vector<std::string> read_lines(const std::filesystem::path &path);
void write_lines(const std::filesystem::path &path,
                 const std::vector<std::string> &lines);
std::string read_text_file(const std::filesystem::path &path);
void write_text_file(const std::filesystem::path &path, std::string_view text);

}  // namespace lingogap
