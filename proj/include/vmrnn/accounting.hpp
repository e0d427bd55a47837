// SPDX-License-Identifier: Apache-2.0
//
// Parameter and compute accounting.
#pragma once

#include <cstdint>
#include <string>

#include "vmrnn/model.hpp"

namespace vmrnn {

/// Exact number of learnable scalars.
template <typename T>
std::size_t count_parameters(const VmrnnModel<T>& model) {
  return model.parameter_count();
}

/// Multiply-accumulate counts at batch size 1. Linear maps, convolutions and
/// the scan contractions are counted; each scan element costs two MACs (state
/// update and read-out). Norms, activations and gathers are not counted.
struct FlopReport {
  std::uint64_t macs_per_step = 0;  // one recurrent model step
  std::size_t steps = 0;            // model steps in one rollout
  std::uint64_t rollout_macs = 0;   // macs_per_step * steps

  /// 2 * MACs of a single step.
  std::uint64_t flops_per_step() const { return 2 * macs_per_step; }
  /// The headline figure: MACs accumulated over the whole rollout, the
  /// convention used by common per-model FLOP counters for recurrent models.
  std::uint64_t rollout_flops() const { return rollout_macs; }
};

FlopReport estimate_flops(const ModelConfig& cfg, const RolloutPlan& plan);

/// MACs of one VSS block on `tokens` tokens of width `channels`.
std::uint64_t vss_block_macs(std::size_t tokens, std::size_t channels, std::size_t state_dim, ConvVariant conv);

}  // namespace vmrnn
