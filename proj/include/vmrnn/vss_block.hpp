// SPDX-License-Identifier: Apache-2.0
//
// Visual state-space block: pre-norm, a linear map into two E-wide streams,
// conv -> SiLU -> SS2D -> norm on the first, SiLU gate on the second, their
// product projected back to C and added to the input. There is no MLP stage.
#pragma once

#include <array>
#include <random>
#include <string>
#include <vector>

#include "vmrnn/layers.hpp"
#include "vmrnn/ss2d.hpp"

namespace vmrnn {

enum class ConvVariant {
  DepthWise,       // 3x3 depth-wise
  Conv2d,          // 3x3 dense
  DwDwdPointwise,  // 5x5 depth-wise, 7x7 depth-wise dilation 3, 1x1
};

ConvVariant parse_conv_variant(const std::string& name);  // "dw" | "conv2d" | "dw_dwd_1x1"
std::string to_string(ConvVariant v);

struct VssShape {
  std::size_t channels = 0;  // C
  std::size_t expand = 0;    // E; 0 means 2*C
  std::size_t state_dim = 16;
  std::size_t delta_rank = 0;  // 0 means ceil(C / 16)
  ConvVariant conv = ConvVariant::DepthWise;

  std::size_t inner() const { return expand ? expand : 2 * channels; }
  std::size_t rank() const { return delta_rank ? delta_rank : (channels + 15) / 16; }
};

template <typename T>
struct ConvParams {
  ConvVariant variant = ConvVariant::DepthWise;
  Var<T> w1, b1;  // first (or only) conv
  Var<T> w2, b2;  // dilated depth-wise, DwDwdPointwise only
  LinearParams<T> pointwise;  // DwDwdPointwise only

  static ConvParams init(ConvVariant variant, std::size_t channels, std::mt19937_64& rng);

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + "w1", w1);
    f(prefix + "b1", b1);
    if (variant == ConvVariant::DwDwdPointwise) {
      f(prefix + "w2", w2);
      f(prefix + "b2", b2);
      pointwise.visit(prefix + "pointwise.", f);
    }
  }
};

/// x: [B, H, W, E] -> [B, H, W, E], spatial size preserved by zero padding.
template <typename T>
Var<T> apply_conv(const Var<T>& x, const ConvParams<T>& p);

template <typename T>
struct VssParams {
  LayerNormParams<T> in_norm;
  LinearParams<T> in_proj;  // C -> 2E
  ConvParams<T> conv;
  std::array<S6Params<T>, 4> ss2d;
  LayerNormParams<T> post_norm;
  LinearParams<T> out_proj;  // E -> C

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    in_norm.visit(prefix + "in_norm.", f);
    in_proj.visit(prefix + "in_proj.", f);
    conv.visit(prefix + "conv.", f);
    for (std::size_t v = 0; v < 4; ++v) ss2d[v].visit(prefix + "ss2d." + std::to_string(v + 1) + ".", f);
    post_norm.visit(prefix + "post_norm.", f);
    out_proj.visit(prefix + "out_proj.", f);
  }
};

template <typename T>
VssParams<T> init_vss_params(const VssShape& shape, std::mt19937_64& rng);

/// tokens: [B, L, C] with L == H*W.
template <typename T>
Var<T> vss_forward(const Var<T>& tokens, GridShape grid, const VssParams<T>& params, ScanOptions opt = {});

template <typename T>
Var<T> vss_stack(const Var<T>& tokens, GridShape grid, const std::vector<VssParams<T>>& blocks, ScanOptions opt = {});

}  // namespace vmrnn
