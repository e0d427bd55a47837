// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "vmrnn/autograd.hpp"
#include "vmrnn/selective_scan.hpp"

namespace fixtures {

template <typename T>
vmrnn::Tensor<T> uniform(vmrnn::Shape shape, double lo, double hi, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(lo, hi);
  vmrnn::Tensor<T> t(std::move(shape));
  for (auto& v : t.vec()) v = static_cast<T>(d(rng));
  return t;
}

template <typename T>
vmrnn::Var<T> param(vmrnn::Shape shape, double lo, double hi, std::uint64_t seed) {
  return vmrnn::Var<T>::parameter(uniform<T>(std::move(shape), lo, hi, seed));
}

/// Replaces every parameter visited by `params.visit` with uniform noise so
/// tests exercise non-degenerate values. Scan-specific entries keep a stable
/// range: a_log in [-1, 1], delta_bias in [-2, 0].
template <typename P>
void scramble(P& params, std::uint64_t seed, double scale = 0.5) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  params.visit("", [&](const std::string& name, auto& v) {
    const bool is_alog = name.ends_with("a_log"), is_dbias = name.ends_with("delta_bias");
    const bool is_gamma = name.ends_with("gamma");
    for (auto& x : v.mutable_value().vec()) {
      const double r = d(rng);
      using T = std::remove_reference_t<decltype(x)>;
      if (is_alog) x = T(r);
      else if (is_dbias) x = T(-1.0 + r);
      else if (is_gamma) x = T(1.0 + 0.5 * r);
      else x = T(scale * r);
    }
  });
}

/// Unique scratch directory under the system temp dir, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("vmrnn-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

}  // namespace fixtures
