// SPDX-License-Identifier: Apache-2.0
//
// Run configuration: model, rollout plans, optimizer, data source and loop
// settings, plus the named presets. Configurations are JSON documents with
// one section per group:
//
//   { "preset": "taxibj-b",            // optional base
//     "model": {...}, "plan": {...}, "eval_plan": {...},
//     "optim": {...}, "data": {...}, "train": {...} }
//
// Unknown keys are rejected so typos surface as configuration errors.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vmrnn/metrics.hpp"
#include "vmrnn/model.hpp"

namespace vmrnn {

struct OptimConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double min_lr = 1e-6;     // cosine floor; clamped to learning_rate
  double grad_clip = 0.0;   // global-norm bound, 0 disables
  std::string schedule = "cosine";  // cosine | constant
  std::size_t warmup_steps = 0;

  void validate() const;
  bool operator==(const OptimConfig&) const = default;
};

struct DataConfig {
  std::string source = "sprites";  // sprites | flows | file
  std::string train_path, val_path;
  std::size_t train_sequences = 1000;
  std::size_t val_sequences = 100;
  std::size_t seq_len = 20;
  std::size_t sprites = 2;
  std::size_t glyph_size = 0;
  double speed_min = 2.0, speed_max = 4.0;
  std::uint64_t seed = 1234;
  ErrorConvention convention = ErrorConvention::PerPixelMean;

  void validate() const;
  bool operator==(const DataConfig&) const = default;
};

struct TrainConfig {
  std::string name = "custom";
  ModelConfig model;
  RolloutPlan plan;       // training rollout
  RolloutPlan eval_plan;  // evaluation rollout (may be longer)
  OptimConfig optim;
  DataConfig data;
  std::size_t epochs = 1;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;
  std::size_t checkpoint_every = 1;  // epochs; 0 keeps only last and best
  std::size_t max_steps = 0;         // 0 = no cap
  double time_budget_s = 0.0;        // 0 = no budget
  std::size_t eval_sequences = 0;    // 0 = whole validation set
  std::string out_dir = "runs/default";

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

std::vector<std::string> preset_names();
/// Throws ConfigError for unknown names.
TrainConfig preset(const std::string& name);

std::string to_json(const ModelConfig& m);
ModelConfig model_config_from_json(const std::string& text);

std::string to_json(const TrainConfig& cfg, int indent = 2);
/// Parses a document as described above; missing keys keep preset/defaults.
TrainConfig config_from_json(const std::string& text);
TrainConfig load_config(const std::filesystem::path& path);

/// Sets one dotted key ("optim.learning_rate", "model.vsb_depths") from its
/// textual value. JSON literals are accepted; anything else is a string.
void apply_override(TrainConfig& cfg, const std::string& key, const std::string& value);

/// Applies VMRNN_SEED when set. Returns true when the seed was overridden.
bool apply_env_seed(TrainConfig& cfg);

/// Comma-separated integer list, e.g. "2,6,6,2".
std::vector<std::size_t> parse_size_list(const std::string& text);

}  // namespace vmrnn
