// SPDX-License-Identifier: Apache-2.0
// Internal helpers over nlohmann::json; not installed.
#pragma once

#include <initializer_list>
#include <string>
#include <string_view>

#include <json.hpp>

#include "lingogap/record.hpp"
#include "lingogap/types.hpp"

namespace lingogap::detail {

template <class Json = nlohmann::ordered_json>
Json parse_record(std::string_view text) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error &e) {
    const std::size_t pos = e.byte == 0 ? 0 : e.byte - 1;
    throw ParseError(pos, e.what());
  }
}

template <class Json>
const Json &field(const Json &j, const char *name) {
  if (!j.is_object()) throw InvariantError(name, "record is not an object");
  auto it = j.find(name);
  if (it == j.end()) throw InvariantError(name, "missing field");
  return *it;
}

template <class T, class Json>
T get(const Json &j, const char *name) {
  const Json &v = field(j, name);
  try {
    return v.template get<T>();
  } catch (const nlohmann::json::exception &e) {
    throw InvariantError(name, std::string("wrong type: ") + e.what());
  }
}

template <class T, class Json>
T get_or(const Json &j, const char *name, T fallback) {
  if (!j.is_object() || !j.contains(name)) return fallback;
  return get<T>(j, name);
}

/// Throws DomainError naming the first key of `j` not in `allowed`.
template <class Json>
void reject_unknown_keys(const Json &j, std::initializer_list<std::string_view> allowed,
                         std::string_view context) {
  if (!j.is_object()) return;
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (auto a : allowed) ok = ok || a == it.key();
    if (!ok)
      throw DomainError(std::string(context) + ": unknown key '" + it.key() + "'");
  }
}

template <class Json>
void check_version(const Json &j) {
  const int v = get<int>(j, "v");
  if (v != kRecordVersion)
    throw InvariantError("v", "unsupported record version " + std::to_string(v));
}

}  // namespace lingogap::detail
