// SPDX-License-Identifier: Apache-2.0
//
// Dense compute kernels. Each parallel kernel has a plain serial reference
// with identical semantics; tests compare the two and bench/ times them.
#pragma once

#include <cstddef>

namespace vmrnn::kernels {

/// c[m,n] (+)= sum_k a[m,k] * b[k,n], all row-major.
template <typename T>
void gemm_reference(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c, bool accumulate);

/// Register-blocked, OpenMP-parallel over row panels.
template <typename T>
void gemm(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c, bool accumulate);

/// out[c,r] = in[r,c] for an r x c matrix.
template <typename T>
void transpose(std::size_t rows, std::size_t cols, const T* in, T* out);

/// NHWC depth-wise convolution with zero padding; weight layout [kh, kw, channels].
struct DepthwiseGeometry {
  std::size_t batch, height, width, channels;
  std::size_t kernel_h, kernel_w;
  std::size_t dilation;
  std::size_t pad_h, pad_w;
};

template <typename T>
void depthwise_conv_reference(const DepthwiseGeometry& g, const T* in, const T* weight, const T* bias, T* out);

template <typename T>
void depthwise_conv(const DepthwiseGeometry& g, const T* in, const T* weight, const T* bias, T* out);

/// Gradients of depthwise_conv; each output pointer is accumulated into and may be null.
template <typename T>
void depthwise_conv_backward(const DepthwiseGeometry& g, const T* in, const T* weight, const T* grad_out,
                             T* grad_in, T* grad_weight, T* grad_bias);

/// NHWC dense 2-D convolution, stride 1, zero padding; weight layout [kh, kw, c_in, c_out].
struct ConvGeometry {
  std::size_t batch, height, width, in_channels, out_channels;
  std::size_t kernel_h, kernel_w;
  std::size_t pad_h, pad_w;
};

template <typename T>
void conv2d_reference(const ConvGeometry& g, const T* in, const T* weight, const T* bias, T* out);

template <typename T>
void conv2d(const ConvGeometry& g, const T* in, const T* weight, const T* bias, T* out);

template <typename T>
void conv2d_backward(const ConvGeometry& g, const T* in, const T* weight, const T* grad_out, T* grad_in,
                     T* grad_weight, T* grad_bias);

}  // namespace vmrnn::kernels
