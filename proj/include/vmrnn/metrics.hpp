// SPDX-License-Identifier: Apache-2.0
//
// Frame-quality metrics. Inputs are frame stacks whose last three axes are
// (H, W, C); any leading axes enumerate frames. All arithmetic is in double.
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "vmrnn/tensor.hpp"

namespace vmrnn {

/// How squared / absolute errors are normalized.
///   PerPixelMean: mean over every element.
///   PerFrameSum:  summed over each frame's pixels and channels, then averaged
///                 over frames. Always equals PerPixelMean * (H * W * C).
enum class ErrorConvention { PerPixelMean, PerFrameSum };

ErrorConvention parse_convention(const std::string& name);  // "per_pixel_mean" | "per_frame_sum"
std::string to_string(ErrorConvention c);

inline constexpr double kPsnrCap = 100.0;

template <typename T>
double mse(const Tensor<T>& pred, const Tensor<T>& target, ErrorConvention convention);

template <typename T>
double mae(const Tensor<T>& pred, const Tensor<T>& target, ErrorConvention convention);

/// Gaussian-window SSIM (11x11, sigma 1.5, K1 0.01, K2 0.03) over valid
/// windows, averaged over windows, channels and frames. Frames smaller than
/// the window use one global window with uniform weights.
template <typename T>
double ssim(const Tensor<T>& pred, const Tensor<T>& target, double data_range = 1.0);

/// 10 log10(range^2 / per-pixel MSE) per frame, capped at kPsnrCap, averaged.
template <typename T>
double psnr(const Tensor<T>& pred, const Tensor<T>& target, double data_range = 1.0);

/// SSIM of a single H x W x C frame given as raw pointers.
double ssim_frame(const float* a, const float* b, std::size_t h, std::size_t w, std::size_t c, double data_range);
double ssim_frame(const double* a, const double* b, std::size_t h, std::size_t w, std::size_t c, double data_range);

struct FrameMetrics {
  double mse = 0, mae = 0, ssim = 0, psnr = 0;
};

struct MetricReport {
  ErrorConvention convention = ErrorConvention::PerPixelMean;
  double mse = 0, mae = 0, ssim = 0, psnr = 0;
  std::vector<FrameMetrics> per_frame;  // one entry per predicted time step
  std::size_t sequences = 0;

  /// CSV with a header, one row per time step and a final "all" row.
  std::string to_csv() const;
  /// Short human-readable block.
  std::string summary() const;
};

/// Accumulates predictions [B, T, H, W, C] against targets of equal shape,
/// batch by batch, and produces a report whose scalar fields are the means
/// of the per-step rows.
class MetricAccumulator {
 public:
  MetricAccumulator(ErrorConvention convention, double data_range = 1.0)
      : convention_(convention), data_range_(data_range) {}

  template <typename T>
  void add(const Tensor<T>& pred, const Tensor<T>& target);

  MetricReport report() const;

 private:
  struct Sums {
    double se = 0, ae = 0, ssim = 0, psnr = 0;
  };
  ErrorConvention convention_;
  double data_range_;
  std::size_t frame_elems_ = 0;
  std::size_t sequences_ = 0;
  std::vector<Sums> steps_;
};

}  // namespace vmrnn
