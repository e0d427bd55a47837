// SPDX-License-Identifier: Apache-2.0
//
// Synthetic bouncing-sprite sequences, a flat binary dataset format and a
// loader for externally prepared raw grids.
//
// Dataset file layout (all integers little-endian):
//   "VMRN" | u16 version | u16 dtype code | u64 dims[5] | raw row-major data
// dims are (sequences, frames, height, width, channels); dtype 1 = float32.
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "vmrnn/tensor.hpp"

namespace vmrnn {

enum class Split { Train, Val, Test };
Split parse_split(const std::string& name);
std::string to_string(Split s);

struct SequenceDataset {
  Tensor<float> frames;  // [N, T, H, W, C], values in [0, 1]
  Split split = Split::Train;
  std::string provenance;

  std::size_t size() const { return frames.rank() == 5 ? frames.dim(0) : 0; }
  std::size_t seq_len() const { return frames.dim(1); }
  std::size_t height() const { return frames.dim(2); }
  std::size_t width() const { return frames.dim(3); }
  std::size_t channels() const { return frames.dim(4); }

  /// Copies the listed sequences into a [indices.size(), T, H, W, C] batch.
  Tensor<float> batch(const std::vector<std::size_t>& indices) const;
  /// Sequences [first, first + count) as a new dataset with the same split.
  SequenceDataset slice(std::size_t first, std::size_t count) const;
};

/// 64-bit FNV-1a over the raw float bytes of the frames.
std::uint64_t dataset_digest(const Tensor<float>& frames);
std::string hex_digest(std::uint64_t d);

struct Glyph {
  std::size_t height = 0, width = 0;
  std::vector<float> pixels;  // row-major, values in [0, 1]

  float at(std::size_t y, std::size_t x) const { return pixels[y * width + x]; }
};

/// Ten distinct binary shapes (seven-segment numerals) of the given square size.
std::vector<Glyph> procedural_glyphs(std::size_t size);

/// Glyphs from a binary PGM sheet: square glyphs of side = image height laid
/// out left to right. Pixel values are scaled by maxval.
std::vector<Glyph> load_glyph_sheet(const std::filesystem::path& pgm);

struct DigitSprite {
  std::size_t glyph = 0;
  double x = 0, y = 0;    // top-left corner, pixels
  double vx = 0, vy = 0;  // pixels per frame
};

/// Moves the sprite one frame and reflects it off the canvas walls so that the
/// glyph box stays inside [0, canvas - glyph]. Speed is preserved.
void advance_sprite(DigitSprite& s, std::size_t canvas_h, std::size_t canvas_w, std::size_t glyph_h,
                    std::size_t glyph_w);

/// Composites a glyph into one channel of an H x W x C frame with max; the
/// position is rounded to the nearest pixel.
void stamp_glyph(float* frame, std::size_t h, std::size_t w, std::size_t c, std::size_t channel, const Glyph& g,
                 double x, double y);

struct SpriteConfig {
  std::uint64_t seed = 0;
  std::size_t sequences = 100;
  std::size_t seq_len = 20;
  std::size_t height = 64, width = 64, channels = 1;
  std::size_t sprites = 2;
  std::size_t glyph_size = 0;  // 0 = 7/16 of the shorter side
  double speed_min = 2.0, speed_max = 4.0;
};

/// Each sequence draws its glyphs, positions, a direction and a fixed speed
/// from a generator seeded by (seed, sequence index), so any sequence can be
/// regenerated on its own.
SequenceDataset generate_moving_sprites(const SpriteConfig& cfg, const std::vector<Glyph>& glyphs = {});

struct FlowConfig {
  std::uint64_t seed = 0;
  std::size_t sequences = 100;
  std::size_t seq_len = 8;
  std::size_t height = 32, width = 32, channels = 2;
  std::size_t blobs = 4;
};

/// Smooth drifting Gaussian intensity fields with a shared daily-style cycle,
/// one correlated field per channel. A stand-in for crowd-flow grids.
SequenceDataset generate_flow_fields(const FlowConfig& cfg);

void save_dataset(const SequenceDataset& ds, const std::filesystem::path& path);
SequenceDataset load_dataset(const std::filesystem::path& path, Split split = Split::Train);

/// Declarative description of a raw frame series on disk.
struct LayoutSpec {
  std::size_t frames = 0, height = 0, width = 0, channels = 1;
  std::string dtype = "float32";      // float32 | float64 | uint8 | uint16 | int32
  std::string channel_order = "hwc";  // hwc | chw (per frame)
  std::size_t header_bytes = 0;
  double lower = 0.0, upper = 1.0;    // normalization bounds
  std::size_t window = 8;             // clip length (observe + horizon)
  std::size_t stride = 1;

  void validate() const;
};

/// Reads a raw series described by `spec`, maps [lower, upper] to [0, 1] and
/// cuts sliding windows of `window` frames.
SequenceDataset load_external_grid(const std::filesystem::path& path, const LayoutSpec& spec,
                                   Split split = Split::Train);

}  // namespace vmrnn
