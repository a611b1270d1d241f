// SPDX-License-Identifier: Apache-2.0
// Shared helpers for the unit and acceptance suites.
#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "lingogap/synthtask.hpp"
#include "lingogap/types.hpp"

namespace lingogap::testing {

/// Point on the probability simplex; `spiky` concentrates mass.
inline StepDistribution random_step(std::mt19937_64 &rng, std::size_t vocab,
                                    bool spiky = false) {
  std::gamma_distribution<double> g(spiky ? 0.2 : 1.0, 1.0);
  std::vector<double> p(vocab);
  double sum = 0.0;
  for (double &x : p) sum += (x = g(rng) + 1e-300);
  for (double &x : p) x /= sum;
  return StepDistribution(std::move(p));
}

inline SequenceDistribution random_sequence(std::mt19937_64 &rng, std::size_t vocab,
                                            std::size_t len) {
  std::vector<StepDistribution> steps;
  Tokens realized;
  std::uniform_int_distribution<TokenId> tok(0, static_cast<TokenId>(vocab) - 1);
  for (std::size_t i = 0; i < len; ++i) {
    steps.push_back(random_step(rng, vocab));
    realized.push_back(tok(rng));
  }
  return SequenceDistribution(std::move(steps), std::move(realized));
}

/// Direct Shannon entropy in nats.
inline double oracle_entropy(const std::vector<double> &p) {
  double h = 0.0;
  for (double x : p)
    if (x > 0) h += x * std::log(1.0 / x);
  return h;
}

/// KL after mixing both arguments with uniform at weight eps.
inline double oracle_kl(const std::vector<double> &p, const std::vector<double> &q,
                        double eps = 1e-8) {
  const double u = 1.0 / static_cast<double>(p.size());
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double a = (1 - eps) * p[i] + eps * u;
    const double b = (1 - eps) * q[i] + eps * u;
    kl += a * (std::log(a) - std::log(b));
  }
  return kl;
}

inline double oracle_ce(const SequenceDistribution &d, const Tokens &gold,
                        double eps = 1e-8) {
  double ce = 0.0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto &p = d.steps()[i].probs();
    ce -= std::log((1 - eps) * p[gold[i]] + eps / static_cast<double>(p.size()));
  }
  return ce;
}

/// A small task that trains in well under a second.
inline TaskSpec small_task(std::uint64_t seed = 7) {
  TaskSpec s;
  s.seed = seed;
  s.split_sizes = {120, 20, 40};
  return s;
}

/// Fresh directory under the build tree, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string &tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("lingogap_" + tag + "_" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;
  const std::filesystem::path &path() const { return path_; }
  std::filesystem::path operator/(const std::string &p) const { return path_ / p; }

 private:
  std::filesystem::path path_;
};

}  // namespace lingogap::testing
