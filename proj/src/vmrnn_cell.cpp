// SPDX-License-Identifier: Apache-2.0
#include "vmrnn/vmrnn_cell.hpp"

namespace vmrnn {

namespace {

template <typename T>
CellState<T> resolve_prev(const Var<T>& x, const std::optional<CellState<T>>& prev) {
  if (!prev) return {Var<T>::constant(Tensor<T>(x.shape())), Var<T>::constant(Tensor<T>(x.shape()))};
  if (prev->h.shape() != x.shape() || prev->c.shape() != x.shape())
    throw ConfigError("cell state " + shape_str(prev->h.shape()) + " does not match input " + shape_str(x.shape()));
  return *prev;
}

}  // namespace

template <typename T>
CellParams<T> init_cell_params(const CellShape& shape, std::mt19937_64& rng) {
  if (shape.depth < 1) throw ConfigError("cell needs at least one VSS block");
  CellParams<T> p;
  const std::size_t C = shape.vss.channels;
  p.lp = LinearParams<T>::init(2 * C, C, true, rng);
  p.vsb.reserve(shape.depth);
  for (std::size_t i = 0; i < shape.depth; ++i) p.vsb.push_back(init_vss_params<T>(shape.vss, rng));
  return p;
}

template <typename T>
std::pair<Var<T>, CellState<T>> cell_step(const Var<T>& x, GridShape grid, const std::optional<CellState<T>>& prev,
                                          const CellParams<T>& params, ScanOptions opt) {
  const CellState<T> state = resolve_prev(x, prev);
  const Var<T> g = vss_stack(params.lp(concat_last(x, state.h)), grid, params.vsb, opt);
  const Var<T> f = sigmoid(g);
  const Var<T> c = mul(f, add(tanh(g), state.c));
  const Var<T> h = mul(f, tanh(c));
  return {h, CellState<T>{h, c}};
}

template <typename T>
std::pair<Var<T>, CellState<T>> simplified_convlstm_step(const Var<T>& x, const std::optional<CellState<T>>& prev) {
  const CellState<T> state = resolve_prev(x, prev);
  const Var<T> z = add(x, state.h);
  const Var<T> gate = sigmoid(z);
  const Var<T> c = add(mul(gate, state.c), mul(gate, tanh(z)));
  const Var<T> h = mul(gate, tanh(c));
  return {h, CellState<T>{h, c}};
}

#define VMRNN_INSTANTIATE_CELL(T)                                                                               \
  template CellParams<T> init_cell_params<T>(const CellShape&, std::mt19937_64&);                               \
  template std::pair<Var<T>, CellState<T>> cell_step<T>(const Var<T>&, GridShape,                               \
                                                        const std::optional<CellState<T>>&, const CellParams<T>&, \
                                                        ScanOptions);                                           \
  template std::pair<Var<T>, CellState<T>> simplified_convlstm_step<T>(const Var<T>&,                           \
                                                                       const std::optional<CellState<T>>&);

VMRNN_INSTANTIATE_CELL(float)
VMRNN_INSTANTIATE_CELL(double)

}  // namespace vmrnn
