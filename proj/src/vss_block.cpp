// SPDX-License-Identifier: Apache-2.0
#include "vmrnn/vss_block.hpp"

namespace vmrnn {

ConvVariant parse_conv_variant(const std::string& name) {
  if (name == "dw") return ConvVariant::DepthWise;
  if (name == "conv2d") return ConvVariant::Conv2d;
  if (name == "dw_dwd_1x1") return ConvVariant::DwDwdPointwise;
  throw ConfigError("unknown conv_variant '" + name + "' (expected dw | conv2d | dw_dwd_1x1)");
}

std::string to_string(ConvVariant v) {
  switch (v) {
    case ConvVariant::DepthWise: return "dw";
    case ConvVariant::Conv2d: return "conv2d";
    case ConvVariant::DwDwdPointwise: return "dw_dwd_1x1";
  }
  return "?";
}

template <typename T>
ConvParams<T> ConvParams<T>::init(ConvVariant variant, std::size_t channels, std::mt19937_64& rng) {
  ConvParams p;
  p.variant = variant;
  const std::size_t C = channels;
  switch (variant) {
    case ConvVariant::DepthWise:
      p.w1 = Var<T>::parameter(init::fan_in_uniform<T>(Shape{3, 3, C}, 9, rng));
      p.b1 = Var<T>::parameter(Tensor<T>(Shape{C}));
      break;
    case ConvVariant::Conv2d:
      p.w1 = Var<T>::parameter(init::fan_in_uniform<T>(Shape{3, 3, C, C}, 9 * C, rng));
      p.b1 = Var<T>::parameter(Tensor<T>(Shape{C}));
      break;
    case ConvVariant::DwDwdPointwise:
      p.w1 = Var<T>::parameter(init::fan_in_uniform<T>(Shape{5, 5, C}, 25, rng));
      p.b1 = Var<T>::parameter(Tensor<T>(Shape{C}));
      p.w2 = Var<T>::parameter(init::fan_in_uniform<T>(Shape{7, 7, C}, 49, rng));
      p.b2 = Var<T>::parameter(Tensor<T>(Shape{C}));
      p.pointwise = LinearParams<T>::init(C, C, true, rng);
      break;
  }
  return p;
}

template <typename T>
Var<T> apply_conv(const Var<T>& x, const ConvParams<T>& p) {
  switch (p.variant) {
    case ConvVariant::DepthWise:
      return depthwise_conv2d(x, p.w1, p.b1, Conv2dOptions{1, 1});
    case ConvVariant::Conv2d:
      return conv2d(x, p.w1, p.b1, 1);
    case ConvVariant::DwDwdPointwise: {
      const Var<T> a = depthwise_conv2d(x, p.w1, p.b1, Conv2dOptions{1, 2});
      const Var<T> b = depthwise_conv2d(a, p.w2, p.b2, Conv2dOptions{3, 9});
      return p.pointwise(b);
    }
  }
  throw ConfigError("invalid conv variant");
}

template <typename T>
VssParams<T> init_vss_params(const VssShape& shape, std::mt19937_64& rng) {
  const std::size_t C = shape.channels, E = shape.inner();
  if (C == 0) throw ConfigError("VSS block needs a positive channel width");
  VssParams<T> p;
  p.in_norm = LayerNormParams<T>::init(C);
  p.in_proj = LinearParams<T>::init(C, 2 * E, true, rng);
  p.conv = ConvParams<T>::init(shape.conv, E, rng);
  for (auto& s : p.ss2d) s = init_s6_params<T>(S6Shape{E, shape.state_dim, shape.rank()}, rng);
  p.post_norm = LayerNormParams<T>::init(E);
  p.out_proj = LinearParams<T>::init(E, C, true, rng);
  return p;
}

template <typename T>
Var<T> vss_forward(const Var<T>& tokens, GridShape grid, const VssParams<T>& p, ScanOptions opt) {
  if (tokens.shape().size() != 3) throw ConfigError("vss_forward: expected [B, L, C] tokens");
  const std::size_t B = tokens.dim(0), L = tokens.dim(1);
  if (L != grid.tokens())
    throw ConfigError("vss_forward: L = " + std::to_string(L) + " but grid is " + std::to_string(grid.height) + "x" +
                      std::to_string(grid.width));
  const std::size_t E = p.in_proj.weight.dim(1) / 2;

  const Var<T> streams = p.in_proj(p.in_norm(tokens));
  const Var<T> gate = silu(slice_last(streams, E, E));
  Var<T> x = reshape(slice_last(streams, 0, E), Shape{B, grid.height, grid.width, E});
  x = silu(apply_conv(x, p.conv));
  x = reshape(ss2d_forward(x, p.ss2d, opt), Shape{B, L, E});
  x = mul(p.post_norm(x), gate);
  return add(tokens, p.out_proj(x));
}

template <typename T>
Var<T> vss_stack(const Var<T>& tokens, GridShape grid, const std::vector<VssParams<T>>& blocks, ScanOptions opt) {
  if (blocks.empty()) throw ConfigError("vss_stack: depth must be >= 1");
  Var<T> x = tokens;
  for (const auto& b : blocks) x = vss_forward(x, grid, b, opt);
  return x;
}

#define VMRNN_INSTANTIATE_VSS(T)                                                                            \
  template struct ConvParams<T>;                                                                            \
  template Var<T> apply_conv<T>(const Var<T>&, const ConvParams<T>&);                                       \
  template VssParams<T> init_vss_params<T>(const VssShape&, std::mt19937_64&);                              \
  template Var<T> vss_forward<T>(const Var<T>&, GridShape, const VssParams<T>&, ScanOptions);               \
  template Var<T> vss_stack<T>(const Var<T>&, GridShape, const std::vector<VssParams<T>>&, ScanOptions);

VMRNN_INSTANTIATE_VSS(float)
VMRNN_INSTANTIATE_VSS(double)

}  // namespace vmrnn
