// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "vmrnn/ops.hpp"
#include "vmrnn/vmrnn_cell.hpp"

using namespace vmrnn;
using fixtures::uniform;

namespace {

template <typename T>
CellParams<T> random_cell(std::size_t C, std::size_t depth, std::uint64_t seed, double scale = 0.5) {
  std::mt19937_64 rng(seed);
  CellShape s;
  s.vss.channels = C;
  s.vss.state_dim = 4;
  s.depth = depth;
  auto p = init_cell_params<T>(s, rng);
  fixtures::scramble(p, seed + 7, scale);
  return p;
}

/// Params whose block stack outputs exactly zero: zero LP and zero out_proj.
template <typename T>
CellParams<T> zero_g_cell(std::size_t C) {
  auto p = random_cell<T>(C, 1, 3);
  p.lp.weight.mutable_value().fill(0);
  p.lp.bias.mutable_value().fill(0);
  p.vsb[0].out_proj.weight.mutable_value().fill(0);
  p.vsb[0].out_proj.bias.mutable_value().fill(0);
  return p;
}

}  // namespace

TEST_CASE("zero G from zero state") {
  const auto p = zero_g_cell<double>(4);
  const auto x = Var<double>::constant(uniform<double>(Shape{1, 4, 4}, -1, 1, 1));
  const auto [h, next] = cell_step<double>(x, GridShape{2, 2}, std::nullopt, p);
  for (double v : h.value().vec()) CHECK(v == 0.0);
  for (double v : next.c.value().vec()) CHECK(v == 0.0);
  CHECK(h.node() == next.h.node());
}

TEST_CASE("zero G with a carried cell state") {
  const auto p = zero_g_cell<double>(4);
  const auto x = Var<double>::constant(uniform<double>(Shape{1, 4, 4}, -1, 1, 1));
  const auto c0 = uniform<double>(Shape{1, 4, 4}, -3, 3, 2);
  CellState<double> prev{Var<double>::constant(Tensor<double>(Shape{1, 4, 4})), Var<double>::constant(c0)};
  const auto [h, next] = cell_step<double>(x, GridShape{2, 2}, prev, p);
  for (std::size_t i = 0; i < c0.numel(); ++i) {
    CHECK(next.c.value()[i] == doctest::Approx(0.5 * c0[i]).epsilon(1e-15));
    CHECK(h.value()[i] == doctest::Approx(0.5 * std::tanh(0.5 * c0[i])).epsilon(1e-15));
  }
}

TEST_CASE("three-step thread matches the element-wise oracle") {
  const std::size_t C = 8, H = 4, W = 4, L = 16;
  const auto p = random_cell<double>(C, 2, 21);
  std::optional<CellState<double>> state;
  oracle::Vec h(L * C, 0.0), c(L * C, 0.0);
  for (std::uint64_t t = 0; t < 3; ++t) {
    const auto x = Var<double>::constant(uniform<double>(Shape{1, L, C}, -1, 1, 21 + t));
    auto [ht, next] = cell_step(x, GridShape{H, W}, state, p);
    state = next;
    const auto ref = oracle::cell(oracle::values(x), h, c, 1, H, W, p);
    h = ref.h;
    c = ref.c;
    for (std::size_t i = 0; i < h.size(); ++i) {
      REQUIRE(std::fabs(ht.value()[i] - h[i]) < 1e-6);
      REQUIRE(std::fabs(next.c.value()[i] - c[i]) < 1e-6);
    }
  }
}

TEST_CASE("hidden state stays inside (-1, 1)") {
  const auto p = random_cell<float>(4, 1, 5, 2.0);
  std::optional<CellState<float>> state;
  for (std::uint64_t t = 0; t < 6; ++t) {
    const auto x = Var<float>::constant(uniform<float>(Shape{2, 6, 4}, -5, 5, t));
    auto [h, next] = cell_step(x, GridShape{2, 3}, state, p);
    state = next;
    for (float v : h.value().vec()) CHECK(std::fabs(v) < 1.0f);
  }
}

TEST_CASE("state threading has no hidden memory") {
  const auto p = random_cell<double>(4, 1, 8);
  const GridShape g{2, 2};
  std::vector<Var<double>> xs;
  for (std::uint64_t t = 0; t < 3; ++t) xs.push_back(Var<double>::constant(uniform<double>(Shape{1, 4, 4}, -1, 1, t)));
  std::optional<CellState<double>> s1;
  std::vector<Tensor<double>> first;
  for (const auto& x : xs) {
    auto [h, n] = cell_step(x, g, s1, p);
    s1 = n;
    first.push_back(h.value());
  }
  // Interleave an unrelated sequence, then replay: outputs must not change.
  cell_step<double>(xs[2], g, std::nullopt, p);
  std::optional<CellState<double>> s2;
  for (std::size_t t = 0; t < xs.size(); ++t) {
    auto [h, n] = cell_step(xs[t], g, s2, p);
    s2 = n;
    CHECK(h.value() == first[t]);
  }
}

TEST_CASE("shape mismatch with the previous state") {
  const auto p = random_cell<float>(4, 1, 1);
  const auto x = Var<float>::constant(Tensor<float>(Shape{1, 4, 4}));
  CellState<float> bad{Var<float>::constant(Tensor<float>(Shape{1, 6, 4})), Var<float>::constant(Tensor<float>(Shape{1, 6, 4}))};
  CHECK_THROWS_AS(cell_step<float>(x, GridShape{2, 2}, bad, p), ConfigError);
}

TEST_CASE("parameter-free ConvLSTM reference") {
  SUBCASE("zero input and state") {
    const auto [h, n] = simplified_convlstm_step<double>(Var<double>::constant(Tensor<double>(Shape{1, 3, 2})), std::nullopt);
    for (double v : h.value().vec()) CHECK(v == 0.0);
    for (double v : n.c.value().vec()) CHECK(v == 0.0);
  }
  SUBCASE("saturation") {
    const double X = 40.0;
    const auto [h, n] =
        simplified_convlstm_step<double>(Var<double>::constant(Tensor<double>(Shape{1, 2, 2}, X)), std::nullopt);
    for (double v : n.c.value().vec()) CHECK(v == doctest::Approx(std::tanh(X)).epsilon(1e-12));
    for (double v : h.value().vec()) CHECK(v == doctest::Approx(std::tanh(std::tanh(X))).epsilon(1e-12));
  }
  SUBCASE("random step against scalar loops") {
    const auto x = uniform<double>(Shape{1, 5, 3}, -2, 2, 4);
    const auto h0 = uniform<double>(Shape{1, 5, 3}, -1, 1, 5), c0 = uniform<double>(Shape{1, 5, 3}, -1, 1, 6);
    const auto [h, n] = simplified_convlstm_step<double>(Var<double>::constant(x),
                                                 CellState<double>{Var<double>::constant(h0), Var<double>::constant(c0)});
    for (std::size_t i = 0; i < x.numel(); ++i) {
      const double z = x[i] + h0[i], g = oracle::sigmoid(z);
      const double c = g * c0[i] + g * std::tanh(z);
      CHECK(std::fabs(n.c.value()[i] - c) < 1e-7);
      CHECK(std::fabs(h.value()[i] - g * std::tanh(c)) < 1e-7);
    }
  }
}

TEST_CASE("gradients reach the input, both states and every parameter") {
  auto p = random_cell<double>(2, 1, 41);
  const auto x = fixtures::param<double>(Shape{1, 4, 2}, -1, 1, 42);
  const auto h0 = fixtures::param<double>(Shape{1, 4, 2}, -0.9, 0.9, 43);
  const auto c0 = fixtures::param<double>(Shape{1, 4, 2}, -1, 1, 44);
  const auto w = uniform<double>(Shape{1, 4, 2}, -1, 1, 45);
  std::vector<gradcheck::Input> inputs{{"x", x}, {"h0", h0}, {"c0", c0}};
  p.visit("", [&](const std::string& n, Var<double>& v) { inputs.push_back({n, v}); });
  auto loss = [&] {
    auto [h, next] = cell_step<double>(x, GridShape{2, 2}, CellState<double>{h0, c0}, p);
    return add(weighted_sum(h, w), weighted_sum(next.c, w));
  };
  const auto r = gradcheck::check(inputs, loss, 1e-5, 6);
  INFO(r.worst);
  CHECK(r.max_rel < 1e-4);
  for (const auto& in : {x, h0, c0}) {
    double norm = 0;
    for (double g : in.grad().vec()) norm += g * g;
    CHECK(norm > 0);
  }
}
