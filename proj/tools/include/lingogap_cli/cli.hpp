// SPDX-License-Identifier: Apache-2.0
/**
 * @file   cli.hpp
 * @brief  Subcommand dispatch for the lingogap command-line tool.
 *
 * Every subcommand takes --config FILE (JSON) and repeated --set key=value
 * overrides (dotted keys, JSON values, bare strings allowed), writes its
 * outputs under --out and records a manifest.json there.
 */
#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace lingogap::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

/// Environment variable that roots relative --out paths.
inline constexpr const char *kOutputRootEnv = "LINGOGAP_OUTPUT_ROOT";

/// Bad flags, keys or values supplied by the user.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Built-in defaults for a subcommand; throws UsageError for unknown names.
nlohmann::json default_config(const std::string &subcommand);

/// Recursively overlays `user` on `base`. Keys absent from `base` are
/// rejected unless the enclosing default is an empty object or null.
nlohmann::json merge_config(const nlohmann::json &base, const nlohmann::json &user,
                            const std::string &path = "");

/// Applies one "a.b.c=value" override.
void apply_override(nlohmann::json &config, const std::string &assignment);

/// FNV-1a 64 of the compact, key-sorted dump, as 16 hex digits.
std::string config_hash(const nlohmann::json &config);

struct RunManifest {
  std::string subcommand;
  std::string config_hash;
  nlohmann::json config;
  nlohmann::json inputs = nlohmann::json::object();
  std::vector<std::string> outputs;
  nlohmann::json seed;
  std::string toolkit_version;
  double wall_clock_seconds = 0.0;

  nlohmann::json to_json() const;
};

/// Resolves --out against the output-root environment variable.
std::filesystem::path resolve_output_dir(const std::string &out,
                                         const std::string &subcommand);

int dispatch(int argc, const char *const *argv, std::ostream &out,
             std::ostream &err);

}  // namespace lingogap::cli
