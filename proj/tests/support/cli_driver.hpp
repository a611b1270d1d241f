// SPDX-License-Identifier: Apache-2.0
// In-process CLI invocation and output-tree comparison.
#pragma once

#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lingogap/record.hpp"
#include "lingogap_cli/cli.hpp"

namespace lingogap::testing {

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

inline CliRun run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "lingogap");
  std::vector<const char *> argv;
  for (const auto &a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  CliRun r;
  r.code = cli::dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

/// Relative path -> contents for every regular file under `root`.
inline std::map<std::string, std::string> tree(const std::filesystem::path &root,
                                               const std::string &skip = "manifest.json") {
  std::map<std::string, std::string> files;
  for (const auto &e : std::filesystem::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = std::filesystem::relative(e.path(), root).generic_string();
    if (rel == skip) continue;
    files[rel] = read_text_file(e.path());
  }
  return files;
}

}  // namespace lingogap::testing
