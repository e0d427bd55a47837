// SPDX-License-Identifier: Apache-2.0
#include "vmrnn/ss2d.hpp"

#include <memory>
#include <string>

#include "vmrnn/ops.hpp"

namespace vmrnn {

ScanDirection scan_direction_from_id(int id) {
  if (id < 1 || id > 4) throw ConfigError("scan direction id must be 1..4, got " + std::to_string(id));
  return static_cast<ScanDirection>(id);
}

std::vector<std::size_t> scan_order(GridShape grid, ScanDirection dir) {
  const std::size_t H = grid.height, W = grid.width, L = H * W;
  std::vector<std::size_t> order(L);
  switch (dir) {
    case ScanDirection::RowForward:
      for (std::size_t i = 0; i < L; ++i) order[i] = i;
      break;
    case ScanDirection::RowReverse:
      for (std::size_t i = 0; i < L; ++i) order[i] = L - 1 - i;
      break;
    case ScanDirection::ColumnForward:
      for (std::size_t i = 0; i < L; ++i) order[i] = (i % H) * W + i / H;
      break;
    case ScanDirection::ColumnReverse:
      for (std::size_t i = 0; i < L; ++i) {
        const std::size_t j = L - 1 - i;
        order[i] = (j % H) * W + j / H;
      }
      break;
    default:
      throw ConfigError("invalid scan direction");
  }
  return order;
}

namespace {

// Element-level gather map for [B, L, C] tensors: out token i <- in token src[i].
IndexMap token_map(std::size_t batch, std::size_t channels, const std::vector<std::size_t>& src) {
  const std::size_t L = src.size();
  auto idx = std::make_shared<std::vector<std::size_t>>(batch * L * channels);
  std::size_t o = 0;
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t i = 0; i < L; ++i)
      for (std::size_t c = 0; c < channels; ++c) (*idx)[o++] = (b * L + src[i]) * channels + c;
  return idx;
}

}  // namespace

template <typename T>
Var<T> scan_expand(const Var<T>& z, ScanDirection dir) {
  if (z.shape().size() != 4) throw ConfigError("scan_expand: expected [B, H, W, C] grid");
  const GridShape grid{z.dim(1), z.dim(2)};
  if (grid.height < 1 || grid.width < 1) throw ConfigError("scan_expand: empty grid");
  const std::size_t B = z.dim(0), C = z.dim(3);
  return gather(z, token_map(B, C, scan_order(grid, dir)), Shape{B, grid.tokens(), C});
}

template <typename T>
Var<T> scan_merge(const std::array<Var<T>, 4>& seqs, GridShape grid) {
  const Shape& s0 = seqs[0].shape();
  if (s0.size() != 3) throw ConfigError("scan_merge: expected [B, L, C] sequences");
  for (const auto& s : seqs)
    if (s.shape() != s0) throw ConfigError("scan_merge: directional sequences differ in shape");
  if (s0[1] != grid.tokens())
    throw ConfigError("scan_merge: sequence length " + std::to_string(s0[1]) + " != H*W = " +
                      std::to_string(grid.tokens()));
  const std::size_t B = s0[0], C = s0[2];
  std::vector<Var<T>> placed;
  placed.reserve(4);
  for (std::size_t v = 0; v < 4; ++v) {
    const auto order = scan_order(grid, kScanDirections[v]);
    std::vector<std::size_t> inverse(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) inverse[order[i]] = i;
    placed.push_back(gather(seqs[v], token_map(B, C, inverse), Shape{B, grid.height, grid.width, C}));
  }
  return add_n(placed);
}

template <typename T>
Var<T> ss2d_forward(const Var<T>& z, const std::array<S6Params<T>, 4>& params, ScanOptions opt) {
  if (z.shape().size() != 4) throw ConfigError("ss2d_forward: expected [B, H, W, C] grid");
  const GridShape grid{z.dim(1), z.dim(2)};
  std::array<Var<T>, 4> scanned;
  for (std::size_t v = 0; v < 4; ++v) {
    const Var<T> seq = scan_expand(z, kScanDirections[v]);
    scanned[v] = opt.chunk_len ? selective_scan_chunked(seq, params[v], opt.chunk_len)
                               : selective_scan_sequential(seq, params[v]);
  }
  return scan_merge(scanned, grid);
}

#define VMRNN_INSTANTIATE_SS2D(T)                                                          \
  template Var<T> scan_expand<T>(const Var<T>&, ScanDirection);                            \
  template Var<T> scan_merge<T>(const std::array<Var<T>, 4>&, GridShape);                  \
  template Var<T> ss2d_forward<T>(const Var<T>&, const std::array<S6Params<T>, 4>&, ScanOptions);

VMRNN_INSTANTIATE_SS2D(float)
VMRNN_INSTANTIATE_SS2D(double)

}  // namespace vmrnn
