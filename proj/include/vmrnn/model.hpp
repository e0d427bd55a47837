// SPDX-License-Identifier: Apache-2.0
//
// Full predictive models. VMRNN-B: patch embedding, one recurrent cell,
// reconstruction. VMRNN-D: four cells on a 2-down / 2-up token pyramid with
// additive skips between matching scales:
//
//   embed -> cell1 (G, C) -> merge -> cell2 (G/2, 2C) -> merge (G/4, 4C)
//         -> expand (+ cell2 out) -> cell3 (G/2, 2C)
//         -> expand (+ cell1 out) -> cell4 (G, C) -> reconstruct
#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "vmrnn/vmrnn_cell.hpp"

namespace vmrnn {

enum class Variant { Base, Deep };

Variant parse_variant(const std::string& name);  // "B" | "D"
std::string to_string(Variant v);

struct ModelConfig {
  Variant variant = Variant::Base;
  std::size_t patch_size = 4;
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t in_channels = 1;
  std::size_t embed_dim = 128;
  std::vector<std::size_t> vsb_depths{1};
  ConvVariant conv_variant = ConvVariant::DepthWise;
  std::size_t state_dim = 16;

  /// Throws ConfigError on divisibility or depth-list violations.
  void validate() const;
  GridShape token_grid() const { return {height / patch_size, width / patch_size}; }
  std::size_t cell_count() const { return variant == Variant::Base ? 1 : 4; }
  bool operator==(const ModelConfig&) const = default;
};

struct RolloutPlan {
  std::size_t observe = 10;
  std::size_t horizon = 10;

  void validate() const;
  /// Model steps in one rollout: every observed frame plus horizon-1 fed-back predictions.
  std::size_t steps() const { return observe + horizon - 1; }
  bool operator==(const RolloutPlan&) const = default;
};

template <typename T>
struct PatchMergeParams {
  LayerNormParams<T> norm;     // 4C
  LinearParams<T> reduction;   // 4C -> 2C, no bias

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    norm.visit(prefix + "norm.", f);
    reduction.visit(prefix + "reduction.", f);
  }
};

template <typename T>
struct ModelParams {
  LinearParams<T> embed;                 // P*P*C_in -> C
  std::vector<CellParams<T>> cells;
  std::vector<PatchMergeParams<T>> merges;  // Deep only
  std::vector<LinearParams<T>> expands;     // Deep only, C' -> 2C'
  LinearParams<T> recon;                 // C -> P*P*C_in

  template <typename F>
  void visit(F&& f) {
    embed.visit("embed.", f);
    for (std::size_t i = 0; i < cells.size(); ++i) cells[i].visit("cell" + std::to_string(i + 1) + ".", f);
    for (std::size_t i = 0; i < merges.size(); ++i) merges[i].visit("merge" + std::to_string(i + 1) + ".", f);
    for (std::size_t i = 0; i < expands.size(); ++i) expands[i].visit("expand" + std::to_string(i + 1) + ".", f);
    recon.visit("recon.", f);
  }
};

template <typename T>
ModelParams<T> init_model_params(const ModelConfig& cfg, std::mt19937_64& rng);

template <typename T>
using ModelStates = std::vector<std::optional<CellState<T>>>;

/// frame [B, H_img, W_img, C_in] -> tokens [B, (H_img/P)*(W_img/P), C], row-major over patches.
template <typename T>
Var<T> patch_embed(const Var<T>& frame, std::size_t patch, const LinearParams<T>& proj);

/// 2x2 neighbourhoods -> 4C channels -> norm -> 2C. Grid halves per side.
template <typename T>
std::pair<Var<T>, GridShape> patch_merge(const Var<T>& tokens, GridShape grid, const PatchMergeParams<T>& p);

/// C -> 2C, then each token's channels are spread over a 2x2 block of C/2.
template <typename T>
std::pair<Var<T>, GridShape> patch_expand(const Var<T>& tokens, GridShape grid, const LinearParams<T>& proj);

/// tokens [B, L, C] -> frame [B, grid.h*P, grid.w*P, C_in]; inverse of patch_embed's layout.
template <typename T>
Var<T> reconstruct(const Var<T>& tokens, GridShape grid, std::size_t patch, std::size_t in_channels,
                   const LinearParams<T>& proj);

template <typename T>
Var<T> forward_step_b(const Var<T>& frame, ModelStates<T>& states, const ModelParams<T>& params,
                      const ModelConfig& cfg, ScanOptions opt = {});

template <typename T>
Var<T> forward_step_d(const Var<T>& frame, ModelStates<T>& states, const ModelParams<T>& params,
                      const ModelConfig& cfg, ScanOptions opt = {});

/// [B, T, H, W, C] -> [B, H, W, C] at time t.
template <typename T>
Tensor<T> frame_at(const Tensor<T>& frames, std::size_t t);

/// Stacks [B, H, W, C] frames into [B, T, H, W, C].
template <typename T>
Tensor<T> stack_frames(const std::vector<Var<T>>& frames);

template <typename T>
class VmrnnModel {
 public:
  VmrnnModel(ModelConfig cfg, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  ModelParams<T>& params() { return params_; }
  const ModelParams<T>& params() const { return params_; }

  ScanOptions scan_options;

  ModelStates<T> initial_states() const { return ModelStates<T>(config_.cell_count()); }

  /// One recurrent step: frame [B, H, W, C] -> predicted next frame.
  Var<T> step(const Var<T>& frame, ModelStates<T>& states) const;

  /// Every prediction of the rollout, observe + horizon - 1 frames. Output i
  /// predicts input frame i + 1; the first `observe` inputs are ground truth
  /// and the rest are the model's own previous outputs.
  std::vector<Var<T>> rollout_outputs(const Tensor<T>& frames, const RolloutPlan& plan) const;

  /// The `horizon` forecast frames (the tail of rollout_outputs).
  std::vector<Var<T>> rollout(const Tensor<T>& frames, const RolloutPlan& plan) const;

  std::vector<std::pair<std::string, Var<T>>> named_parameters();
  std::size_t parameter_count() const;

 private:
  ModelConfig config_;
  std::uint64_t seed_;
  ModelParams<T> params_;
};

}  // namespace vmrnn
