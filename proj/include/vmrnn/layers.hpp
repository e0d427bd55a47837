// SPDX-License-Identifier: Apache-2.0
//
// Parameter bundles for the plain layers shared by every module.
#pragma once

#include <random>
#include <string>

#include "vmrnn/init.hpp"
#include "vmrnn/ops.hpp"

namespace vmrnn {

template <typename T>
struct LinearParams {
  Var<T> weight;  // [in, out]
  Var<T> bias;    // [out] or undefined

  static LinearParams init(std::size_t in, std::size_t out, bool with_bias, std::mt19937_64& rng) {
    LinearParams p;
    p.weight = Var<T>::parameter(init::trunc_normal<T>(Shape{in, out}, 0.02, rng));
    if (with_bias) p.bias = Var<T>::parameter(Tensor<T>(Shape{out}));
    return p;
  }

  Var<T> operator()(const Var<T>& x) const { return linear(x, weight, bias); }

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + "weight", weight);
    if (bias.defined()) f(prefix + "bias", bias);
  }
};

template <typename T>
struct LayerNormParams {
  Var<T> gamma;
  Var<T> beta;

  static LayerNormParams init(std::size_t channels) {
    return {Var<T>::parameter(Tensor<T>(Shape{channels}, T(1))), Var<T>::parameter(Tensor<T>(Shape{channels}))};
  }

  Var<T> operator()(const Var<T>& x) const { return layer_norm(x, gamma, beta); }

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + "gamma", gamma);
    f(prefix + "beta", beta);
  }
};

}  // namespace vmrnn
