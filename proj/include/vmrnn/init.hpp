// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <random>

#include "vmrnn/tensor.hpp"

namespace vmrnn::init {

/// Normal(0, std) resampled until inside +-2 std.
template <typename T>
Tensor<T> trunc_normal(Shape shape, double stddev, std::mt19937_64& rng) {
  Tensor<T> t(std::move(shape));
  std::normal_distribution<double> dist(0.0, stddev);
  for (auto& v : t.vec()) {
    double x;
    do x = dist(rng);
    while (std::abs(x) > 2.0 * stddev);
    v = static_cast<T>(x);
  }
  return t;
}

template <typename T>
Tensor<T> uniform(Shape shape, double lo, double hi, std::mt19937_64& rng) {
  Tensor<T> t(std::move(shape));
  std::uniform_real_distribution<double> dist(lo, hi);
  for (auto& v : t.vec()) v = static_cast<T>(dist(rng));
  return t;
}

/// Convolution kernels: U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
template <typename T>
Tensor<T> fan_in_uniform(Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  return uniform<T>(std::move(shape), -bound, bound, rng);
}

}  // namespace vmrnn::init
