// SPDX-License-Identifier: Apache-2.0
#include "vmrnn/kernels.hpp"

#include <algorithm>
#include <cstring>
#include <vector>

namespace vmrnn::kernels {

template <typename T>
void gemm_reference(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      T s = accumulate ? c[i * n + j] : T(0);
      for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[p * n + j];
      c[i * n + j] = s;
    }
}

namespace {

// Rows x Cols accumulator tile kept in registers across the k loop.
template <typename T, std::size_t Rows, std::size_t Cols>
inline void gemm_tile(std::size_t n, std::size_t k, const T* a, const T* b, T* c, std::size_t col0, bool accumulate) {
  T acc[Rows][Cols];
  for (std::size_t r = 0; r < Rows; ++r)
    for (std::size_t j = 0; j < Cols; ++j) acc[r][j] = accumulate ? c[r * n + col0 + j] : T(0);
  for (std::size_t p = 0; p < k; ++p) {
    const T* brow = b + p * n + col0;
    for (std::size_t r = 0; r < Rows; ++r) {
      const T av = a[r * k + p];
      for (std::size_t j = 0; j < Cols; ++j) acc[r][j] += av * brow[j];
    }
  }
  for (std::size_t r = 0; r < Rows; ++r)
    for (std::size_t j = 0; j < Cols; ++j) c[r * n + col0 + j] = acc[r][j];
}

template <typename T>
inline void gemm_edge(std::size_t rows, std::size_t n, std::size_t k, const T* a, const T* b, T* c, std::size_t col0,
                      std::size_t col1, bool accumulate) {
  for (std::size_t r = 0; r < rows; ++r) {
    T* crow = c + r * n;
    if (!accumulate)
      for (std::size_t j = col0; j < col1; ++j) crow[j] = T(0);
    for (std::size_t p = 0; p < k; ++p) {
      const T av = a[r * k + p];
      const T* brow = b + p * n;
      for (std::size_t j = col0; j < col1; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace

template <typename T>
void gemm(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c, bool accumulate) {
  constexpr std::size_t kRows = 4;
  constexpr std::size_t kCols = 64 / sizeof(T) * 2;  // two cache lines per accumulator row
  const std::size_t panels = (m + kRows - 1) / kRows;
  const std::size_t full_cols = n / kCols * kCols;
#pragma omp parallel for schedule(static)
  for (std::size_t panel = 0; panel < panels; ++panel) {
    const std::size_t row0 = panel * kRows;
    const std::size_t rows = std::min(kRows, m - row0);
    const T* ap = a + row0 * k;
    T* cp = c + row0 * n;
    if (rows == kRows) {
      for (std::size_t col = 0; col < full_cols; col += kCols) gemm_tile<T, kRows, kCols>(n, k, ap, b, cp, col, accumulate);
      if (full_cols < n) gemm_edge(rows, n, k, ap, b, cp, full_cols, n, accumulate);
    } else {
      gemm_edge(rows, n, k, ap, b, cp, 0, n, accumulate);
    }
  }
}

template <typename T>
void transpose(std::size_t rows, std::size_t cols, const T* in, T* out) {
  constexpr std::size_t kBlock = 32;
  for (std::size_t r0 = 0; r0 < rows; r0 += kBlock)
    for (std::size_t c0 = 0; c0 < cols; c0 += kBlock) {
      const std::size_t r1 = std::min(rows, r0 + kBlock), c1 = std::min(cols, c0 + kBlock);
      for (std::size_t r = r0; r < r1; ++r)
        for (std::size_t c = c0; c < c1; ++c) out[c * rows + r] = in[r * cols + c];
    }
}

// ---------------------------------------------------------------------------
// Depth-wise convolution

template <typename T>
void depthwise_conv_reference(const DepthwiseGeometry& g, const T* in, const T* weight, const T* bias, T* out) {
  const long H = static_cast<long>(g.height), W = static_cast<long>(g.width);
  for (std::size_t b = 0; b < g.batch; ++b)
    for (long y = 0; y < H; ++y)
      for (long x = 0; x < W; ++x)
        for (std::size_t ch = 0; ch < g.channels; ++ch) {
          T s = bias ? bias[ch] : T(0);
          for (std::size_t ky = 0; ky < g.kernel_h; ++ky)
            for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
              const long iy = y + static_cast<long>(ky * g.dilation) - static_cast<long>(g.pad_h);
              const long ix = x + static_cast<long>(kx * g.dilation) - static_cast<long>(g.pad_w);
              if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
              s += weight[(ky * g.kernel_w + kx) * g.channels + ch] *
                   in[((b * g.height + iy) * g.width + ix) * g.channels + ch];
            }
          out[((b * g.height + y) * g.width + x) * g.channels + ch] = s;
        }
}

template <typename T>
void depthwise_conv(const DepthwiseGeometry& g, const T* in, const T* weight, const T* bias, T* out) {
  const long H = static_cast<long>(g.height), W = static_cast<long>(g.width);
  const std::size_t C = g.channels;
#pragma omp parallel for collapse(2) schedule(static)
  for (std::size_t b = 0; b < g.batch; ++b)
    for (long y = 0; y < H; ++y)
      for (long x = 0; x < W; ++x) {
        T* o = out + ((b * g.height + y) * g.width + x) * C;
        for (std::size_t ch = 0; ch < C; ++ch) o[ch] = bias ? bias[ch] : T(0);
        for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
          const long iy = y + static_cast<long>(ky * g.dilation) - static_cast<long>(g.pad_h);
          if (iy < 0 || iy >= H) continue;
          for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
            const long ix = x + static_cast<long>(kx * g.dilation) - static_cast<long>(g.pad_w);
            if (ix < 0 || ix >= W) continue;
            const T* i = in + ((b * g.height + iy) * g.width + ix) * C;
            const T* w = weight + (ky * g.kernel_w + kx) * C;
            for (std::size_t ch = 0; ch < C; ++ch) o[ch] += w[ch] * i[ch];
          }
        }
      }
}

template <typename T>
void depthwise_conv_backward(const DepthwiseGeometry& g, const T* in, const T* weight, const T* grad_out, T* grad_in,
                             T* grad_weight, T* grad_bias) {
  const long H = static_cast<long>(g.height), W = static_cast<long>(g.width);
  const std::size_t C = g.channels;
  for (std::size_t b = 0; b < g.batch; ++b)
    for (long y = 0; y < H; ++y)
      for (long x = 0; x < W; ++x) {
        const T* go = grad_out + ((b * g.height + y) * g.width + x) * C;
        if (grad_bias)
          for (std::size_t ch = 0; ch < C; ++ch) grad_bias[ch] += go[ch];
        for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
          const long iy = y + static_cast<long>(ky * g.dilation) - static_cast<long>(g.pad_h);
          if (iy < 0 || iy >= H) continue;
          for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
            const long ix = x + static_cast<long>(kx * g.dilation) - static_cast<long>(g.pad_w);
            if (ix < 0 || ix >= W) continue;
            const std::size_t tap = (ky * g.kernel_w + kx) * C;
            const std::size_t pix = ((b * g.height + iy) * g.width + ix) * C;
            if (grad_weight)
              for (std::size_t ch = 0; ch < C; ++ch) grad_weight[tap + ch] += go[ch] * in[pix + ch];
            if (grad_in)
              for (std::size_t ch = 0; ch < C; ++ch) grad_in[pix + ch] += go[ch] * weight[tap + ch];
          }
        }
      }
}

// ---------------------------------------------------------------------------
// Dense convolution

template <typename T>
void conv2d_reference(const ConvGeometry& g, const T* in, const T* weight, const T* bias, T* out) {
  const long H = static_cast<long>(g.height), W = static_cast<long>(g.width);
  for (std::size_t b = 0; b < g.batch; ++b)
    for (long y = 0; y < H; ++y)
      for (long x = 0; x < W; ++x)
        for (std::size_t co = 0; co < g.out_channels; ++co) {
          T s = bias ? bias[co] : T(0);
          for (std::size_t ky = 0; ky < g.kernel_h; ++ky)
            for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
              const long iy = y + static_cast<long>(ky) - static_cast<long>(g.pad_h);
              const long ix = x + static_cast<long>(kx) - static_cast<long>(g.pad_w);
              if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
              for (std::size_t ci = 0; ci < g.in_channels; ++ci)
                s += in[((b * g.height + iy) * g.width + ix) * g.in_channels + ci] *
                     weight[((ky * g.kernel_w + kx) * g.in_channels + ci) * g.out_channels + co];
            }
          out[((b * g.height + y) * g.width + x) * g.out_channels + co] = s;
        }
}

template <typename T>
void conv2d(const ConvGeometry& g, const T* in, const T* weight, const T* bias, T* out) {
  const long H = static_cast<long>(g.height), W = static_cast<long>(g.width);
  const std::size_t Ci = g.in_channels, Co = g.out_channels;
#pragma omp parallel for collapse(2) schedule(static)
  for (std::size_t b = 0; b < g.batch; ++b)
    for (long y = 0; y < H; ++y)
      for (long x = 0; x < W; ++x) {
        T* o = out + ((b * g.height + y) * g.width + x) * Co;
        for (std::size_t co = 0; co < Co; ++co) o[co] = bias ? bias[co] : T(0);
        for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
          const long iy = y + static_cast<long>(ky) - static_cast<long>(g.pad_h);
          if (iy < 0 || iy >= H) continue;
          for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
            const long ix = x + static_cast<long>(kx) - static_cast<long>(g.pad_w);
            if (ix < 0 || ix >= W) continue;
            const T* i = in + ((b * g.height + iy) * g.width + ix) * Ci;
            const T* w = weight + (ky * g.kernel_w + kx) * Ci * Co;
            for (std::size_t ci = 0; ci < Ci; ++ci) {
              const T v = i[ci];
              const T* wr = w + ci * Co;
              for (std::size_t co = 0; co < Co; ++co) o[co] += v * wr[co];
            }
          }
        }
      }
}

template <typename T>
void conv2d_backward(const ConvGeometry& g, const T* in, const T* weight, const T* grad_out, T* grad_in,
                     T* grad_weight, T* grad_bias) {
  const long H = static_cast<long>(g.height), W = static_cast<long>(g.width);
  const std::size_t Ci = g.in_channels, Co = g.out_channels;
  for (std::size_t b = 0; b < g.batch; ++b)
    for (long y = 0; y < H; ++y)
      for (long x = 0; x < W; ++x) {
        const T* go = grad_out + ((b * g.height + y) * g.width + x) * Co;
        if (grad_bias)
          for (std::size_t co = 0; co < Co; ++co) grad_bias[co] += go[co];
        for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
          const long iy = y + static_cast<long>(ky) - static_cast<long>(g.pad_h);
          if (iy < 0 || iy >= H) continue;
          for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
            const long ix = x + static_cast<long>(kx) - static_cast<long>(g.pad_w);
            if (ix < 0 || ix >= W) continue;
            const std::size_t pix = ((b * g.height + iy) * g.width + ix) * Ci;
            const std::size_t tap = (ky * g.kernel_w + kx) * Ci * Co;
            for (std::size_t ci = 0; ci < Ci; ++ci) {
              const T* wr = weight + tap + ci * Co;
              if (grad_in) {
                T s = 0;
                for (std::size_t co = 0; co < Co; ++co) s += go[co] * wr[co];
                grad_in[pix + ci] += s;
              }
              if (grad_weight) {
                const T v = in[pix + ci];
                T* gw = grad_weight + tap + ci * Co;
                for (std::size_t co = 0; co < Co; ++co) gw[co] += v * go[co];
              }
            }
          }
        }
      }
}

#define VMRNN_INSTANTIATE_KERNELS(T)                                                                              \
  template void gemm_reference<T>(std::size_t, std::size_t, std::size_t, const T*, const T*, T*, bool);          \
  template void gemm<T>(std::size_t, std::size_t, std::size_t, const T*, const T*, T*, bool);                    \
  template void transpose<T>(std::size_t, std::size_t, const T*, T*);                                            \
  template void depthwise_conv_reference<T>(const DepthwiseGeometry&, const T*, const T*, const T*, T*);         \
  template void depthwise_conv<T>(const DepthwiseGeometry&, const T*, const T*, const T*, T*);                   \
  template void depthwise_conv_backward<T>(const DepthwiseGeometry&, const T*, const T*, const T*, T*, T*, T*);  \
  template void conv2d_reference<T>(const ConvGeometry&, const T*, const T*, const T*, T*);                      \
  template void conv2d<T>(const ConvGeometry&, const T*, const T*, const T*, T*);                                \
  template void conv2d_backward<T>(const ConvGeometry&, const T*, const T*, const T*, T*, T*, T*);

VMRNN_INSTANTIATE_KERNELS(float)
VMRNN_INSTANTIATE_KERNELS(double)

}  // namespace vmrnn::kernels
