// SPDX-License-Identifier: Apache-2.0
/**
 * @file   checkpoint.hpp
 * @brief  Versioned JSON checkpoints: model config, step counter and named
 *         parameter segments.
 */
#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "lingogap/toymodel.hpp"

namespace lingogap {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig config;
  ModelState state;
};

std::string model_config_to_json(const ModelConfig &c);
/// Missing keys keep their defaults.
ModelConfig model_config_from_json(std::string_view text);

std::string checkpoint_to_json(const ToyModel &model, const ModelState &state);
/// Validates segment names and shapes against ToyModel(config).
Checkpoint checkpoint_from_json(std::string_view text);

void save_checkpoint(const std::filesystem::path &path, const ToyModel &model,
                     const ModelState &state);
Checkpoint load_checkpoint(const std::filesystem::path &path);

}  // namespace lingogap
