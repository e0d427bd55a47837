// SPDX-License-Identifier: Apache-2.0
//
// Recurrent cell. With G = VSB(LP([X_t ; H_{t-1}])):
//
//   F_t = sigmoid(G)
//   C_t = F_t * (tanh(G) + C_{t-1})
//   H_t = F_t * tanh(C_t)
//
// G is evaluated once and shared by both gates.
#pragma once

#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "vmrnn/vss_block.hpp"

namespace vmrnn {

template <typename T>
struct CellState {
  Var<T> h;  // [B, L, C]
  Var<T> c;  // [B, L, C]
};

struct CellShape {
  VssShape vss;
  std::size_t depth = 1;
};

template <typename T>
struct CellParams {
  LinearParams<T> lp;  // 2C -> C
  std::vector<VssParams<T>> vsb;

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    lp.visit(prefix + "lp.", f);
    for (std::size_t i = 0; i < vsb.size(); ++i) vsb[i].visit(prefix + "vsb." + std::to_string(i) + ".", f);
  }
};

template <typename T>
CellParams<T> init_cell_params(const CellShape& shape, std::mt19937_64& rng);

/// Returns (H_t, next). H_t is the same Var as next.h. A missing `prev`
/// means zero hidden and cell state.
template <typename T>
std::pair<Var<T>, CellState<T>> cell_step(const Var<T>& x, GridShape grid, const std::optional<CellState<T>>& prev,
                                          const CellParams<T>& params, ScanOptions opt = {});

/// Parameter-free ConvLSTM with all weights and biases removed:
/// i = f = o = sigmoid(X + H), C_t = f*C + i*tanh(X + H), H_t = o*tanh(C_t).
template <typename T>
std::pair<Var<T>, CellState<T>> simplified_convlstm_step(const Var<T>& x, const std::optional<CellState<T>>& prev);

}  // namespace vmrnn
