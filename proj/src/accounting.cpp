// SPDX-License-Identifier: Apache-2.0
#include "vmrnn/accounting.hpp"

namespace vmrnn {

std::uint64_t vss_block_macs(std::size_t tokens, std::size_t channels, std::size_t state_dim, ConvVariant conv) {
  VssShape s;
  s.channels = channels;
  s.state_dim = state_dim;
  const std::uint64_t L = tokens, C = channels, E = s.inner(), N = state_dim, R = s.rank();
  std::uint64_t m = L * C * 2 * E;  // in_proj
  switch (conv) {
    case ConvVariant::DepthWise: m += L * E * 9; break;
    case ConvVariant::Conv2d: m += L * E * E * 9; break;
    case ConvVariant::DwDwdPointwise: m += L * E * (25 + 49) + L * E * E; break;
  }
  const std::uint64_t per_direction = L * E * R + L * R * E  // delta low-rank projection
                                      + L * E * 2 * N        // B and C projection
                                      + L * E * N * 2;       // scan update and read-out
  m += 4 * per_direction;
  m += L * E * C;  // out_proj
  return m;
}

namespace {

std::uint64_t cell_macs(std::size_t tokens, std::size_t channels, std::size_t depth, const ModelConfig& cfg) {
  const std::uint64_t L = tokens, C = channels;
  std::uint64_t m = L * 2 * C * C;  // LP over [X; H]
  for (std::size_t i = 0; i < depth; ++i) m += vss_block_macs(tokens, channels, cfg.state_dim, cfg.conv_variant);
  return m;
}

}  // namespace

FlopReport estimate_flops(const ModelConfig& cfg, const RolloutPlan& plan) {
  cfg.validate();
  plan.validate();
  const GridShape g = cfg.token_grid();
  const std::uint64_t L = g.tokens(), C = cfg.embed_dim, F = cfg.patch_size * cfg.patch_size * cfg.in_channels;
  std::uint64_t m = L * F * C + L * C * F;  // embed + reconstruct
  if (cfg.variant == Variant::Base) {
    m += cell_macs(L, C, cfg.vsb_depths[0], cfg);
  } else {
    const std::uint64_t L2 = L / 4, L4 = L / 16;
    m += cell_macs(L, C, cfg.vsb_depths[0], cfg);
    m += L2 * 4 * C * 2 * C;               // merge 1
    m += cell_macs(L2, 2 * C, cfg.vsb_depths[1], cfg);
    m += L4 * 8 * C * 4 * C;               // merge 2
    m += L4 * 4 * C * 8 * C;               // expand 1
    m += cell_macs(L2, 2 * C, cfg.vsb_depths[2], cfg);
    m += L2 * 2 * C * 4 * C;               // expand 2
    m += cell_macs(L, C, cfg.vsb_depths[3], cfg);
  }
  FlopReport r;
  r.macs_per_step = m;
  r.steps = plan.steps();
  r.rollout_macs = m * r.steps;
  return r;
}

}  // namespace vmrnn
