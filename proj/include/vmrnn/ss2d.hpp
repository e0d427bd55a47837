// SPDX-License-Identifier: Apache-2.0
//
// 2-D selective scan: a token grid is unrolled along four traversals, each
// sequence goes through its own S6 scan, and the four results are scattered
// back to grid positions and summed.
#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "vmrnn/selective_scan.hpp"

namespace vmrnn {

struct GridShape {
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t tokens() const { return height * width; }
  bool operator==(const GridShape&) const = default;
};

/// Traversal orders. Ids follow the 1..4 numbering used in configs.
enum class ScanDirection : int {
  RowForward = 1,     // top-left to bottom-right, row-major
  RowReverse = 2,     // bottom-right to top-left
  ColumnForward = 3,  // column-major, top-left first
  ColumnReverse = 4,  // column-major reversed
};

inline constexpr std::array<ScanDirection, 4> kScanDirections{ScanDirection::RowForward, ScanDirection::RowReverse,
                                                              ScanDirection::ColumnForward,
                                                              ScanDirection::ColumnReverse};

ScanDirection scan_direction_from_id(int id);

/// order[i] is the row-major grid index visited at sequence position i.
std::vector<std::size_t> scan_order(GridShape grid, ScanDirection dir);

/// z: [B, H, W, C] -> [B, H*W, C] in the traversal order of `dir`.
template <typename T>
Var<T> scan_expand(const Var<T>& z, ScanDirection dir);

/// Scatters each directional sequence back to grid positions and sums.
/// seqs[v]: [B, H*W, C] in the order of kScanDirections[v]; result [B, H, W, C].
template <typename T>
Var<T> scan_merge(const std::array<Var<T>, 4>& seqs, GridShape grid);

/// z: [B, H, W, C]; params[v] belongs to kScanDirections[v].
template <typename T>
Var<T> ss2d_forward(const Var<T>& z, const std::array<S6Params<T>, 4>& params, ScanOptions opt = {});

}  // namespace vmrnn
