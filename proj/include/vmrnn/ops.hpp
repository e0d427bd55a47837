// SPDX-License-Identifier: Apache-2.0
//
// Differentiable tensor operations over Var. Channel-like dimensions are
// always the last axis; leading axes are treated as a flat batch of rows.
#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "vmrnn/autograd.hpp"

namespace vmrnn {

template <typename T> Var<T> add(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> sub(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> mul(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> scale(const Var<T>& a, T s);

template <typename T> Var<T> sigmoid(const Var<T>& x);
template <typename T> Var<T> tanh(const Var<T>& x);
template <typename T> Var<T> silu(const Var<T>& x);
template <typename T> Var<T> softplus(const Var<T>& x);

/// Same data, new shape.
template <typename T> Var<T> reshape(const Var<T>& x, Shape shape);

/// x[..., in] * w[in, out] (+ bias[out]). `bias` may be undefined.
template <typename T> Var<T> linear(const Var<T>& x, const Var<T>& w, const Var<T>& bias);

/// Normalizes over the last axis, then applies gamma/beta.
template <typename T> Var<T> layer_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, T eps = T(1e-5));

template <typename T> Var<T> concat_last(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> slice_last(const Var<T>& x, std::size_t offset, std::size_t width);

/// out[i] = x[index[i]]. Gradients scatter-add back through the same map.
using IndexMap = std::shared_ptr<const std::vector<std::size_t>>;
template <typename T> Var<T> gather(const Var<T>& x, IndexMap index, Shape out_shape);

struct Conv2dOptions {
  std::size_t dilation = 1;
  std::size_t padding = 1;
};

/// NHWC depth-wise conv; weight [kh, kw, C], bias [C] or undefined.
template <typename T>
Var<T> depthwise_conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, Conv2dOptions opt = {});

/// NHWC dense conv (stride 1); weight [kh, kw, C_in, C_out], bias [C_out] or undefined.
template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, std::size_t padding = 1);

/// Mean of (pred - target)^2 over all elements; scalar result.
template <typename T> Var<T> mse_loss(const Var<T>& pred, const Var<T>& target);

/// sum_i x[i] * w[i]; scalar result. Used to project outputs in gradient checks.
template <typename T> Var<T> weighted_sum(const Var<T>& x, const Tensor<T>& w);

template <typename T> Var<T> sum(const Var<T>& x);

/// Elementwise sum of several equally shaped vars, recorded as one node.
template <typename T> Var<T> add_n(const std::vector<Var<T>>& xs);

}  // namespace vmrnn
