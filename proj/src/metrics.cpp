// SPDX-License-Identifier: Apache-2.0
#include "vmrnn/metrics.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace vmrnn {

ErrorConvention parse_convention(const std::string& name) {
  if (name == "per_pixel_mean") return ErrorConvention::PerPixelMean;
  if (name == "per_frame_sum") return ErrorConvention::PerFrameSum;
  throw ConfigError("unknown error convention '" + name + "' (expected per_pixel_mean or per_frame_sum)");
}

std::string to_string(ErrorConvention c) {
  return c == ErrorConvention::PerPixelMean ? "per_pixel_mean" : "per_frame_sum";
}

namespace {

template <typename T>
void check_pair(const Tensor<T>& pred, const Tensor<T>& target, const char* what) {
  if (pred.shape() != target.shape())
    throw ConfigError(std::string(what) + ": shape mismatch " + shape_str(pred.shape()) + " vs " +
                      shape_str(target.shape()));
  if (pred.rank() < 3) throw ConfigError(std::string(what) + ": expected frames with trailing (H, W, C) axes");
  if (pred.numel() == 0) throw ConfigError(std::string(what) + ": empty input");
}

template <typename T>
std::size_t frame_size(const Tensor<T>& t) {
  const auto& s = t.shape();
  return s[s.size() - 3] * s[s.size() - 2] * s[s.size() - 1];
}

template <typename T, typename F>
double mean_error(const Tensor<T>& pred, const Tensor<T>& target, ErrorConvention convention, F&& err) {
  double total = 0;
  for (std::size_t i = 0; i < pred.numel(); ++i) total += err(double(pred[i]) - double(target[i]));
  const double per_pixel = total / double(pred.numel());
  return convention == ErrorConvention::PerPixelMean ? per_pixel : per_pixel * double(frame_size(pred));
}

constexpr std::size_t kWin = 11;
constexpr double kSigma = 1.5;

const std::array<double, kWin>& gaussian_taps() {
  static const std::array<double, kWin> taps = [] {
    std::array<double, kWin> g{};
    double s = 0;
    for (std::size_t i = 0; i < kWin; ++i) {
      const double x = double(i) - double(kWin / 2);
      g[i] = std::exp(-x * x / (2 * kSigma * kSigma));
      s += g[i];
    }
    for (auto& v : g) v /= s;
    return g;
  }();
  return taps;
}

double ssim_term(double mx, double my, double sxx, double syy, double sxy, double c1, double c2) {
  return ((2 * mx * my + c1) * (2 * sxy + c2)) / ((mx * mx + my * my + c1) * (sxx + syy + c2));
}

template <typename T>
double ssim_frame_impl(const T* a, const T* b, std::size_t h, std::size_t w, std::size_t c, double range) {
  if (!(range > 0)) throw ConfigError("ssim: data_range must be positive");
  const double c1 = (0.01 * range) * (0.01 * range), c2 = (0.03 * range) * (0.03 * range);
  double total = 0;
  if (h < kWin || w < kWin) {
    const double n = double(h * w);
    for (std::size_t ch = 0; ch < c; ++ch) {
      double mx = 0, my = 0;
      for (std::size_t i = 0; i < h * w; ++i) {
        mx += double(a[i * c + ch]);
        my += double(b[i * c + ch]);
      }
      mx /= n;
      my /= n;
      double sxx = 0, syy = 0, sxy = 0;
      for (std::size_t i = 0; i < h * w; ++i) {
        const double dx = double(a[i * c + ch]) - mx, dy = double(b[i * c + ch]) - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
      }
      total += ssim_term(mx, my, sxx / n, syy / n, sxy / n, c1, c2);
    }
    return total / double(c);
  }

  // Separable filtering: first along rows into [h, ow] buffers, then down columns.
  const auto& g = gaussian_taps();
  const std::size_t oh = h - kWin + 1, ow = w - kWin + 1;
  std::vector<double> rx(h * ow), ry(h * ow), rxx(h * ow), ryy(h * ow), rxy(h * ow);
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < ow; ++x) {
        double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
        for (std::size_t k = 0; k < kWin; ++k) {
          const std::size_t idx = (y * w + x + k) * c + ch;
          const double va = double(a[idx]), vb = double(b[idx]);
          sx += g[k] * va;
          sy += g[k] * vb;
          sxx += g[k] * (va * va);
          syy += g[k] * (vb * vb);
          sxy += g[k] * (va * vb);
        }
        const std::size_t o = y * ow + x;
        rx[o] = sx, ry[o] = sy, rxx[o] = sxx, ryy[o] = syy, rxy[o] = sxy;
      }
    double acc = 0;
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t x = 0; x < ow; ++x) {
        double mx = 0, my = 0, exx = 0, eyy = 0, exy = 0;
        for (std::size_t k = 0; k < kWin; ++k) {
          const std::size_t o = (y + k) * ow + x;
          mx += g[k] * rx[o];
          my += g[k] * ry[o];
          exx += g[k] * rxx[o];
          eyy += g[k] * ryy[o];
          exy += g[k] * rxy[o];
        }
        acc += ssim_term(mx, my, exx - mx * mx, eyy - my * my, exy - mx * my, c1, c2);
      }
    total += acc / double(oh * ow);
  }
  return total / double(c);
}

template <typename T>
double frame_psnr(const T* a, const T* b, std::size_t n, double range) {
  double se = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = double(a[i]) - double(b[i]);
    se += d * d;
  }
  const double m = se / double(n);
  if (m == 0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(range * range / m));
}

}  // namespace

double ssim_frame(const float* a, const float* b, std::size_t h, std::size_t w, std::size_t c, double range) {
  return ssim_frame_impl(a, b, h, w, c, range);
}
double ssim_frame(const double* a, const double* b, std::size_t h, std::size_t w, std::size_t c, double range) {
  return ssim_frame_impl(a, b, h, w, c, range);
}

template <typename T>
double mse(const Tensor<T>& pred, const Tensor<T>& target, ErrorConvention convention) {
  check_pair(pred, target, "mse");
  return mean_error(pred, target, convention, [](double d) { return d * d; });
}

template <typename T>
double mae(const Tensor<T>& pred, const Tensor<T>& target, ErrorConvention convention) {
  check_pair(pred, target, "mae");
  return mean_error(pred, target, convention, [](double d) { return std::abs(d); });
}

template <typename T>
double ssim(const Tensor<T>& pred, const Tensor<T>& target, double data_range) {
  check_pair(pred, target, "ssim");
  const auto& s = pred.shape();
  const std::size_t h = s[s.size() - 3], w = s[s.size() - 2], c = s[s.size() - 1], fs = h * w * c;
  const std::size_t frames = pred.numel() / fs;
  double total = 0;
  for (std::size_t f = 0; f < frames; ++f)
    total += ssim_frame_impl(pred.data() + f * fs, target.data() + f * fs, h, w, c, data_range);
  return total / double(frames);
}

template <typename T>
double psnr(const Tensor<T>& pred, const Tensor<T>& target, double data_range) {
  check_pair(pred, target, "psnr");
  const std::size_t fs = frame_size(pred), frames = pred.numel() / fs;
  double total = 0;
  for (std::size_t f = 0; f < frames; ++f)
    total += frame_psnr(pred.data() + f * fs, target.data() + f * fs, fs, data_range);
  return total / double(frames);
}

template <typename T>
void MetricAccumulator::add(const Tensor<T>& pred, const Tensor<T>& target) {
  check_pair(pred, target, "metrics");
  if (pred.rank() != 5) throw ConfigError("metrics: expected [B, T, H, W, C] predictions");
  const auto& s = pred.shape();
  const std::size_t batch = s[0], steps = s[1], h = s[2], w = s[3], c = s[4], fs = h * w * c;
  if (steps_.empty()) {
    steps_.resize(steps);
    frame_elems_ = fs;
  } else if (steps != steps_.size() || fs != frame_elems_) {
    throw ConfigError("metrics: batch shape differs from earlier batches");
  }
  for (std::size_t bi = 0; bi < batch; ++bi)
    for (std::size_t t = 0; t < steps; ++t) {
      const T* a = pred.data() + (bi * steps + t) * fs;
      const T* b = target.data() + (bi * steps + t) * fs;
      double se = 0, ae = 0;
      for (std::size_t i = 0; i < fs; ++i) {
        const double d = double(a[i]) - double(b[i]);
        se += d * d;
        ae += std::abs(d);
      }
      Sums& acc = steps_[t];
      acc.se += se;
      acc.ae += ae;
      acc.ssim += ssim_frame_impl(a, b, h, w, c, data_range_);
      acc.psnr += frame_psnr(a, b, fs, data_range_);
    }
  sequences_ += batch;
}

MetricReport MetricAccumulator::report() const {
  MetricReport r;
  r.convention = convention_;
  r.sequences = sequences_;
  if (sequences_ == 0) return r;
  const double n = double(sequences_);
  const double scale = convention_ == ErrorConvention::PerPixelMean ? 1.0 : double(frame_elems_);
  for (const Sums& s : steps_) {
    FrameMetrics f;
    f.mse = s.se / (n * double(frame_elems_)) * scale;
    f.mae = s.ae / (n * double(frame_elems_)) * scale;
    f.ssim = s.ssim / n;
    f.psnr = s.psnr / n;
    r.per_frame.push_back(f);
    r.mse += f.mse;
    r.mae += f.mae;
    r.ssim += f.ssim;
    r.psnr += f.psnr;
  }
  const double k = double(steps_.size());
  r.mse /= k;
  r.mae /= k;
  r.ssim /= k;
  r.psnr /= k;
  return r;
}

namespace {
std::string row(const std::string& label, double mse, double mae, double ssim, double psnr) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%.9g,%.9g,%.9g,%.9g\n", label.c_str(), mse, mae, ssim, psnr);
  return buf;
}
}  // namespace

std::string MetricReport::to_csv() const {
  std::string out = "step,mse,mae,ssim,psnr\n";
  for (std::size_t t = 0; t < per_frame.size(); ++t)
    out += row(std::to_string(t + 1), per_frame[t].mse, per_frame[t].mae, per_frame[t].ssim, per_frame[t].psnr);
  out += row("all", mse, mae, ssim, psnr);
  return out;
}

std::string MetricReport::summary() const {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "MSE %.4f  MAE %.4f  SSIM %.4f  PSNR %.2f dB", mse, mae, ssim, psnr);
  os << buf << "  (" << to_string(convention) << ", " << sequences << " sequences, " << per_frame.size()
     << " steps)\n";
  return os.str();
}

#define VMRNN_INSTANTIATE(T)                                                          \
  template double mse<T>(const Tensor<T>&, const Tensor<T>&, ErrorConvention);       \
  template double mae<T>(const Tensor<T>&, const Tensor<T>&, ErrorConvention);       \
  template double ssim<T>(const Tensor<T>&, const Tensor<T>&, double);               \
  template double psnr<T>(const Tensor<T>&, const Tensor<T>&, double);               \
  template void MetricAccumulator::add<T>(const Tensor<T>&, const Tensor<T>&);
VMRNN_INSTANTIATE(float)
VMRNN_INSTANTIATE(double)
#undef VMRNN_INSTANTIATE

}  // namespace vmrnn
