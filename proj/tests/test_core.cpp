// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "vmrnn/init.hpp"
#include "vmrnn/kernels.hpp"
#include "vmrnn/ops.hpp"

using namespace vmrnn;
using fixtures::param;
using fixtures::uniform;

namespace {

template <typename T>
double max_diff(const std::vector<T>& a, const oracle::Vec& b) {
  REQUIRE(a.size() == b.size());
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(double(a[i]) - b[i]));
  return m;
}

template <typename F>
void expect_gradients(std::vector<gradcheck::Input> inputs, F&& loss, std::size_t per_input = 16) {
  const auto r = gradcheck::check(inputs, loss, 1e-5, per_input);
  INFO(r.worst);
  CHECK(r.max_rel < 1e-4);
}

}  // namespace

TEST_CASE("tensor basics") {
  Tensor<float> t(Shape{2, 3, 4}, 1.5f);
  CHECK(t.numel() == 24);
  CHECK(t.rank() == 3);
  t.at({1, 2, 3}) = 7;
  CHECK(t[23] == 7);
  CHECK_THROWS_AS(t.at({1, 2}), ConfigError);
  t.reshape(Shape{6, 4});
  CHECK(t.dim(0) == 6);
  CHECK_THROWS_AS(t.reshape(Shape{5, 5}), ConfigError);
  CHECK_THROWS_AS((Tensor<float>(Shape{2, 2}, std::vector<float>(3))), ConfigError);
  CHECK(shape_str(Shape{2, 3}) == "[2, 3]");
  const auto d = t.cast<double>();
  CHECK(d[23] == 7.0);
  t[5] = std::nanf("");
  CHECK(first_non_finite(t) == 5);
  try {
    require_finite(t, "t");
    FAIL("expected a throw");
  } catch (const NumericError& e) {
    CHECK(e.index() == 5);
  }
}

TEST_CASE("autograd bookkeeping") {
  SUBCASE("shared subexpressions accumulate") {
    auto x = Var<double>::parameter(Tensor<double>(Shape{3}, std::vector<double>{1, 2, 3}));
    const auto y = mul(x, x);
    backward(sum(add(y, y)));
    CHECK(x.grad().vec() == std::vector<double>{4, 8, 12});
    x.zero_grad();
    backward(sum(scale(x, 3.0)));
    CHECK(x.grad().vec() == std::vector<double>{3, 3, 3});
  }
  SUBCASE("constants and no-grad regions record nothing") {
    const auto c = Var<double>::constant(Tensor<double>(Shape{2}, 1.0));
    CHECK_FALSE(add(c, c).requires_grad());
    const auto p = Var<double>::parameter(Tensor<double>(Shape{2}, 1.0));
    {
      NoGradGuard guard;
      CHECK_FALSE(grad_enabled());
      CHECK_FALSE(add(p, p).requires_grad());
    }
    CHECK(grad_enabled());
    CHECK(add(p, c).requires_grad());
  }
  SUBCASE("a long chain does not overflow the stack when released") {
    auto x = Var<float>::parameter(Tensor<float>(Shape{1}, 1.0f));
    auto y = x;
    for (int i = 0; i < 200000; ++i) y = add(y, x);
    backward(y);
    CHECK(x.grad()[0] == 200001.0f);
  }
}

TEST_CASE("element-wise ops against scalar formulas") {
  const auto a = uniform<double>(Shape{4, 5}, -30, 30, 1), b = uniform<double>(Shape{4, 5}, -3, 3, 2);
  const auto va = Var<double>::constant(a), vb = Var<double>::constant(b);
  for (std::size_t i = 0; i < a.numel(); ++i) {
    CHECK(add(va, vb).value()[i] == a[i] + b[i]);
    CHECK(sub(va, vb).value()[i] == a[i] - b[i]);
    CHECK(mul(va, vb).value()[i] == a[i] * b[i]);
    CHECK(sigmoid(va).value()[i] == doctest::Approx(oracle::sigmoid(a[i])).epsilon(1e-14));
    CHECK(silu(va).value()[i] == doctest::Approx(oracle::silu(a[i])).epsilon(1e-14));
    CHECK(softplus(vb).value()[i] == doctest::Approx(oracle::softplus(b[i])).epsilon(1e-14));
    CHECK(vmrnn::tanh(va).value()[i] == doctest::Approx(std::tanh(a[i])).epsilon(1e-14));
  }
  // Large arguments stay finite.
  const auto big = Var<float>::constant(Tensor<float>(Shape{2}, std::vector<float>{-500.f, 500.f}));
  CHECK(sigmoid(big).value()[0] == 0.0f);
  CHECK(sigmoid(big).value()[1] == 1.0f);
  CHECK(softplus(big).value()[1] == 500.0f);
  CHECK(softplus(big).value()[0] >= 0.0f);
  CHECK_THROWS_AS(add(va, Var<double>::constant(Tensor<double>(Shape{5, 4}))), ConfigError);
}

TEST_CASE("linear, layer norm, concat and slice against oracles") {
  const auto x = uniform<double>(Shape{2, 3, 6}, -1, 1, 3);
  const auto w = uniform<double>(Shape{6, 5}, -1, 1, 4), bias = uniform<double>(Shape{5}, -1, 1, 5);
  const auto y = linear(Var<double>::constant(x), Var<double>::constant(w), Var<double>::constant(bias));
  CHECK(y.shape() == Shape{2, 3, 5});
  CHECK(max_diff(y.value().vec(), oracle::linear(x.vec(), 6, 6, w.vec(), 5, &bias.vec())) < 1e-13);
  CHECK(max_diff(linear(Var<double>::constant(x), Var<double>::constant(w), Var<double>{}).value().vec(),
                 oracle::linear(x.vec(), 6, 6, w.vec(), 5, nullptr)) < 1e-13);

  const auto g = uniform<double>(Shape{6}, 0.5, 1.5, 6), be = uniform<double>(Shape{6}, -1, 1, 7);
  const auto n = layer_norm(Var<double>::constant(x), Var<double>::constant(g), Var<double>::constant(be));
  CHECK(max_diff(n.value().vec(), oracle::layer_norm(x.vec(), 6, 6, g.vec(), be.vec())) < 1e-12);

  const auto cat = concat_last(Var<double>::constant(x), Var<double>::constant(uniform<double>(Shape{2, 3, 2}, 0, 1, 8)));
  CHECK(cat.shape() == Shape{2, 3, 8});
  CHECK(slice_last(cat, 0, 6).value() == x);
  CHECK_THROWS_AS(slice_last(cat, 5, 4), ConfigError);
}

TEST_CASE("convolutions against oracles, serial references and parallel kernels") {
  for (auto [k, dil] : std::vector<std::pair<std::size_t, std::size_t>>{{3, 1}, {5, 1}, {7, 3}}) {
    const std::size_t pad = dil * (k - 1) / 2;
    const auto x = uniform<double>(Shape{2, 9, 7, 4}, -1, 1, k);
    const auto w = uniform<double>(Shape{k, k, 4}, -1, 1, k + 1), b = uniform<double>(Shape{4}, -1, 1, k + 2);
    const auto y = depthwise_conv2d(Var<double>::constant(x), Var<double>::constant(w), Var<double>::constant(b),
                                    Conv2dOptions{dil, pad});
    CHECK(y.shape() == x.shape());
    CHECK(max_diff(y.value().vec(), oracle::depthwise(x.vec(), 2, 9, 7, 4, w.vec(), b.vec(), k, dil, pad)) < 1e-13);
  }
  const auto x = uniform<double>(Shape{1, 6, 5, 3}, -1, 1, 20);
  const auto w = uniform<double>(Shape{3, 3, 3, 4}, -1, 1, 21), b = uniform<double>(Shape{4}, -1, 1, 22);
  const auto y = conv2d(Var<double>::constant(x), Var<double>::constant(w), Var<double>::constant(b));
  CHECK(y.shape() == Shape{1, 6, 5, 4});
  CHECK(max_diff(y.value().vec(), oracle::dense_conv(x.vec(), 1, 6, 5, 3, 4, w.vec(), b.vec(), 3, 1)) < 1e-13);
}

TEST_CASE("parallel kernels agree with their serial references") {
  SUBCASE("gemm") {
    for (auto [m, n, k] : std::vector<std::array<std::size_t, 3>>{{1, 1, 1}, {7, 13, 5}, {64, 96, 33}, {129, 17, 250}}) {
      const auto a = uniform<float>(Shape{m, k}, -1, 1, m), b = uniform<float>(Shape{k, n}, -1, 1, n);
      auto c1 = uniform<float>(Shape{m, n}, -1, 1, k), c2 = c1;
      kernels::gemm_reference(m, n, k, a.data(), b.data(), c1.data(), true);
      kernels::gemm(m, n, k, a.data(), b.data(), c2.data(), true);
      CHECK(max_abs_diff(c1, c2) < 1e-4f);
      kernels::gemm(m, n, k, a.data(), b.data(), c2.data(), false);
      kernels::gemm_reference(m, n, k, a.data(), b.data(), c1.data(), false);
      CHECK(max_abs_diff(c1, c2) < 1e-4f);
    }
  }
  SUBCASE("transpose") {
    const auto a = uniform<double>(Shape{5, 3}, -1, 1, 1);
    Tensor<double> t(Shape{3, 5});
    kernels::transpose(5, 3, a.data(), t.data());
    for (std::size_t r = 0; r < 5; ++r)
      for (std::size_t c = 0; c < 3; ++c) CHECK(t[c * 5 + r] == a[r * 3 + c]);
  }
  SUBCASE("depth-wise and dense convolution") {
    const kernels::DepthwiseGeometry dg{2, 17, 11, 24, 7, 7, 3, 9, 9};
    const auto in = uniform<float>(Shape{2, 17, 11, 24}, -1, 1, 2), w = uniform<float>(Shape{7, 7, 24}, -1, 1, 3);
    const auto b = uniform<float>(Shape{24}, -1, 1, 4);
    Tensor<float> o1(in.shape()), o2(in.shape());
    kernels::depthwise_conv_reference(dg, in.data(), w.data(), b.data(), o1.data());
    kernels::depthwise_conv(dg, in.data(), w.data(), b.data(), o2.data());
    CHECK(max_abs_diff(o1, o2) < 1e-5f);

    const kernels::ConvGeometry cg{1, 9, 10, 8, 12, 3, 3, 1, 1};
    const auto ci = uniform<float>(Shape{1, 9, 10, 8}, -1, 1, 5), cw = uniform<float>(Shape{3, 3, 8, 12}, -1, 1, 6);
    const auto cb = uniform<float>(Shape{12}, -1, 1, 7);
    Tensor<float> p1(Shape{1, 9, 10, 12}), p2(Shape{1, 9, 10, 12});
    kernels::conv2d_reference(cg, ci.data(), cw.data(), cb.data(), p1.data());
    kernels::conv2d(cg, ci.data(), cw.data(), cb.data(), p2.data());
    CHECK(max_abs_diff(p1, p2) < 1e-5f);
  }
}

TEST_CASE("op gradients") {
  const auto a = param<double>(Shape{3, 4}, -2, 2, 1), b = param<double>(Shape{3, 4}, -2, 2, 2);
  const auto w = uniform<double>(Shape{3, 4}, -1, 1, 3);
  SUBCASE("element-wise") {
    expect_gradients({{"a", a}, {"b", b}}, [&] {
      return weighted_sum(add_n<double>({mul(sigmoid(a), vmrnn::tanh(b)), silu(sub(a, b)), softplus(scale(a, 2.0))}), w);
    });
  }
  SUBCASE("linear and layer norm") {
    const auto lw = param<double>(Shape{4, 3}, -1, 1, 4), lb = param<double>(Shape{3}, -1, 1, 5);
    const auto g = param<double>(Shape{4}, 0.5, 1.5, 6), be = param<double>(Shape{4}, -1, 1, 7);
    const auto out_w = uniform<double>(Shape{3, 3}, -1, 1, 8);
    expect_gradients({{"a", a}, {"w", lw}, {"b", lb}, {"gamma", g}, {"beta", be}},
                     [&] { return weighted_sum(linear(layer_norm(a, g, be), lw, lb), out_w); });
  }
  SUBCASE("concat, slice, reshape, gather and mse") {
    auto idx = std::make_shared<std::vector<std::size_t>>(std::vector<std::size_t>{0, 5, 5, 11, 2, 7});
    const auto target = Var<double>::constant(uniform<double>(Shape{3, 4}, -1, 1, 9));
    expect_gradients({{"a", a}, {"b", b}}, [&] {
      const auto cat = concat_last(a, b);
      const auto picked = gather(reshape(slice_last(cat, 2, 4), Shape{12}), idx, Shape{2, 3});
      return add(mse_loss(slice_last(cat, 1, 4), target), sum(mul(picked, picked)));
    });
  }
  SUBCASE("depth-wise convolution with dilation") {
    const auto x = param<double>(Shape{1, 5, 6, 2}, -1, 1, 10);
    const auto k = param<double>(Shape{3, 3, 2}, -1, 1, 11), kb = param<double>(Shape{2}, -1, 1, 12);
    const auto ow = uniform<double>(Shape{1, 5, 6, 2}, -1, 1, 13);
    expect_gradients({{"x", x}, {"w", k}, {"b", kb}},
                     [&] { return weighted_sum(depthwise_conv2d(x, k, kb, Conv2dOptions{2, 2}), ow); });
  }
  SUBCASE("dense convolution") {
    const auto x = param<double>(Shape{1, 4, 3, 2}, -1, 1, 14);
    const auto k = param<double>(Shape{3, 3, 2, 3}, -1, 1, 15), kb = param<double>(Shape{3}, -1, 1, 16);
    const auto ow = uniform<double>(Shape{1, 4, 3, 3}, -1, 1, 17);
    expect_gradients({{"x", x}, {"w", k}, {"b", kb}}, [&] { return weighted_sum(conv2d(x, k, kb), ow); });
  }
}

TEST_CASE("truncated normal initializer stays within two standard deviations") {
  std::mt19937_64 rng(1);
  const auto t = init::trunc_normal<float>(Shape{5000}, 0.02, rng);
  double mean = 0;
  for (float v : t.vec()) {
    REQUIRE(std::fabs(v) <= 0.04f);
    mean += v / 5000.0;
  }
  CHECK(std::fabs(mean) < 2e-3);
}
