// SPDX-License-Identifier: Apache-2.0
/**
 * @file   text.hpp
 * @brief  Token sets, Jaccard similarity and code-point Levenshtein distance.
 */
#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace lingogap {

using TokenSet = std::set<std::string>;

/// Whitespace split with ASCII lower-casing.
std::vector<std::string> word_tokens(std::string_view text);
TokenSet token_set(std::string_view text);

/// |A ∩ B| / |A ∪ B|; two empty sets count as identical (1.0).
double jaccard(const TokenSet &a, const TokenSet &b);

/// Decodes UTF-8; invalid bytes map to U+FFFD one byte at a time.
std::u32string utf8_decode(std::string_view s);

/// Unit-cost insert/delete/replace distance over code points.
std::size_t edit_distance(std::string_view a, std::string_view b);

/// edit_distance / max code-point length; 0 when both are empty.
double normalized_edit_distance(std::string_view a, std::string_view b);

}  // namespace lingogap
