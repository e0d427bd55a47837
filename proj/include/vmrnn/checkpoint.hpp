// SPDX-License-Identifier: Apache-2.0
//
// Checkpoint archive (little-endian):
//   "VMRC" | u16 version | u32 meta length | meta JSON (model config, seed,
//   progress) | u32 array count | arrays...
// Each array: u16 name length | name | u16 dtype (1 = float32) | u16 rank |
// u64 dims[rank] | raw data.
#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>

#include "vmrnn/model.hpp"

namespace vmrnn {

struct CheckpointMeta {
  ModelConfig model;
  std::uint64_t seed = 0;
  std::size_t epoch = 0;
  std::size_t step = 0;
  double val_mse = std::numeric_limits<double>::quiet_NaN();
  std::string tag;  // "last", "best", "epoch-3", ...
};

void save_checkpoint(const std::filesystem::path& path, VmrnnModel<float>& model, const CheckpointMeta& meta);

struct LoadedCheckpoint {
  VmrnnModel<float> model;
  CheckpointMeta meta;
};

/// Rebuilds the model from the stored configuration and fills every
/// parameter. Missing, extra or mis-shaped arrays raise FormatError.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace vmrnn
