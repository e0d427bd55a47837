// SPDX-License-Identifier: Apache-2.0
#include "vmrnn/data.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>

namespace vmrnn {

namespace fs = std::filesystem;

Split parse_split(const std::string& name) {
  if (name == "train") return Split::Train;
  if (name == "val") return Split::Val;
  if (name == "test") return Split::Test;
  throw ConfigError("unknown split '" + name + "'");
}

std::string to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "train";
}

Tensor<float> SequenceDataset::batch(const std::vector<std::size_t>& indices) const {
  const std::size_t per = frames.numel() / std::max<std::size_t>(size(), 1);
  Shape shape = frames.shape();
  shape[0] = indices.size();
  Tensor<float> out(shape);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= size()) throw ConfigError("batch index out of range");
    std::memcpy(out.data() + i * per, frames.data() + indices[i] * per, per * sizeof(float));
  }
  return out;
}

SequenceDataset SequenceDataset::slice(std::size_t first, std::size_t count) const {
  if (first + count > size()) throw ConfigError("dataset slice out of range");
  std::vector<std::size_t> idx(count);
  for (std::size_t i = 0; i < count; ++i) idx[i] = first + i;
  return {batch(idx), split, provenance + "[" + std::to_string(first) + ":" + std::to_string(first + count) + "]"};
}

std::uint64_t dataset_digest(const Tensor<float>& frames) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  const auto* p = reinterpret_cast<const unsigned char*>(frames.data());
  for (std::size_t i = 0; i < frames.numel() * sizeof(float); ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  for (std::size_t d : frames.shape()) {
    h ^= d;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex_digest(std::uint64_t d) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(d));
  return buf;
}

// ---------------------------------------------------------------------------
// Glyphs

std::vector<Glyph> procedural_glyphs(std::size_t size) {
  if (size < 5) throw ConfigError("glyph size must be at least 5 pixels");
  // Segment order: top, upper-right, lower-right, bottom, lower-left, upper-left, middle.
  static constexpr std::array<unsigned, 10> kMasks = {0b0111111, 0b0000110, 0b1011011, 0b1001111, 0b1100110,
                                                      0b1101101, 0b1111101, 0b0000111, 0b1111111, 0b1101111};
  const std::size_t t = std::max<std::size_t>(1, size / 6);
  const std::size_t left = size / 6, right = size - 1 - size / 6;
  const std::size_t mid = size / 2 - t / 2;
  std::vector<Glyph> glyphs;
  for (unsigned mask : kMasks) {
    Glyph g{size, size, std::vector<float>(size * size, 0.0f)};
    auto bar = [&](std::size_t y0, std::size_t y1, std::size_t x0, std::size_t x1) {
      for (std::size_t y = y0; y < std::min(y1, size); ++y)
        for (std::size_t x = x0; x < std::min(x1, size); ++x) g.pixels[y * size + x] = 1.0f;
    };
    if (mask & 1u) bar(0, t, left, right + 1);
    if (mask & 2u) bar(0, mid + t, right + 1 - t, right + 1);
    if (mask & 4u) bar(mid, size, right + 1 - t, right + 1);
    if (mask & 8u) bar(size - t, size, left, right + 1);
    if (mask & 16u) bar(mid, size, left, left + t);
    if (mask & 32u) bar(0, mid + t, left, left + t);
    if (mask & 64u) bar(mid, mid + t, left, right + 1);
    glyphs.push_back(std::move(g));
  }
  return glyphs;
}

namespace {

std::string read_pgm_token(std::istream& in) {
  std::string tok;
  char ch;
  while (in.get(ch)) {
    if (ch == '#') {
      std::string skip;
      std::getline(in, skip);
    } else if (!std::isspace(static_cast<unsigned char>(ch))) {
      tok += ch;
      break;
    }
  }
  while (in.get(ch) && !std::isspace(static_cast<unsigned char>(ch))) tok += ch;
  return tok;
}

std::size_t parse_size(const std::string& s, const char* what) {
  try {
    std::size_t pos = 0;
    const auto v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw FormatError(std::string("bad ") + what + " in image header");
  }
}

}  // namespace

std::vector<Glyph> load_glyph_sheet(const fs::path& pgm) {
  std::ifstream in(pgm, std::ios::binary);
  if (!in) throw FormatError("cannot open glyph sheet " + pgm.string());
  if (read_pgm_token(in) != "P5") throw FormatError("glyph sheet is not a binary PGM (P5)");
  const std::size_t w = parse_size(read_pgm_token(in), "width");
  const std::size_t h = parse_size(read_pgm_token(in), "height");
  const std::size_t maxval = parse_size(read_pgm_token(in), "maxval");
  if (h == 0 || w == 0 || w % h != 0) throw FormatError("glyph sheet width must be a multiple of its height");
  if (maxval == 0 || maxval > 255) throw FormatError("glyph sheet must be 8-bit");
  std::vector<unsigned char> raw(w * h);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
    throw FormatError("glyph sheet truncated");
  std::vector<Glyph> glyphs;
  for (std::size_t k = 0; k < w / h; ++k) {
    Glyph g{h, h, std::vector<float>(h * h)};
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < h; ++x)
        g.pixels[y * h + x] = std::min(1.0f, float(raw[y * w + k * h + x]) / float(maxval));
    glyphs.push_back(std::move(g));
  }
  return glyphs;
}

// ---------------------------------------------------------------------------
// Sprites

namespace {

// Reflects a coordinate into [0, limit], flipping the velocity per bounce.
void reflect(double& pos, double& vel, double limit) {
  if (limit <= 0) {
    pos = 0;
    return;
  }
  for (int guard = 0; guard < 64 && (pos < 0 || pos > limit); ++guard) {
    if (pos < 0) pos = -pos;
    else pos = 2 * limit - pos;
    vel = -vel;
  }
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace

void advance_sprite(DigitSprite& s, std::size_t canvas_h, std::size_t canvas_w, std::size_t glyph_h,
                    std::size_t glyph_w) {
  s.x += s.vx;
  s.y += s.vy;
  reflect(s.x, s.vx, double(canvas_w) - double(glyph_w));
  reflect(s.y, s.vy, double(canvas_h) - double(glyph_h));
}

void stamp_glyph(float* frame, std::size_t h, std::size_t w, std::size_t c, std::size_t channel, const Glyph& g,
                 double x, double y) {
  const long x0 = std::lround(x), y0 = std::lround(y);
  for (std::size_t gy = 0; gy < g.height; ++gy)
    for (std::size_t gx = 0; gx < g.width; ++gx) {
      const long py = y0 + long(gy), px = x0 + long(gx);
      if (py < 0 || px < 0 || py >= long(h) || px >= long(w)) continue;
      float& dst = frame[(std::size_t(py) * w + std::size_t(px)) * c + channel];
      dst = std::max(dst, g.at(gy, gx));
    }
}

SequenceDataset generate_moving_sprites(const SpriteConfig& cfg, const std::vector<Glyph>& glyph_source) {
  if (cfg.sprites < 1) throw ConfigError("at least one sprite is required");
  if (cfg.sequences < 1 || cfg.seq_len < 1) throw ConfigError("sequence count and length must be positive");
  if (cfg.channels < 1) throw ConfigError("channel count must be positive");
  if (!(cfg.speed_min >= 0 && cfg.speed_max >= cfg.speed_min)) throw ConfigError("invalid speed range");
  const std::size_t size = cfg.glyph_size ? cfg.glyph_size : std::max<std::size_t>(5, std::min(cfg.height, cfg.width) * 7 / 16);
  const std::vector<Glyph> glyphs = glyph_source.empty() ? procedural_glyphs(size) : glyph_source;
  for (const Glyph& g : glyphs)
    if (g.height > cfg.height || g.width > cfg.width)
      throw ConfigError("glyph " + std::to_string(g.height) + "x" + std::to_string(g.width) +
                        " does not fit the " + std::to_string(cfg.height) + "x" + std::to_string(cfg.width) +
                        " canvas");

  const std::size_t H = cfg.height, W = cfg.width, C = cfg.channels, T = cfg.seq_len;
  Tensor<float> frames(Shape{cfg.sequences, T, H, W, C});
  const std::size_t frame_elems = H * W * C;

#pragma omp parallel for schedule(static)
  for (std::size_t n = 0; n < cfg.sequences; ++n) {
    std::mt19937_64 rng(splitmix(cfg.seed ^ splitmix(n)));
    std::uniform_int_distribution<std::size_t> pick(0, glyphs.size() - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<DigitSprite> sprites(cfg.sprites);
    const double theta = 2 * std::numbers::pi * unit(rng);
    const double speed = cfg.speed_min + (cfg.speed_max - cfg.speed_min) * unit(rng);
    for (std::size_t k = 0; k < cfg.sprites; ++k) {
      DigitSprite& s = sprites[k];
      s.glyph = pick(rng);
      const Glyph& g = glyphs[s.glyph];
      s.x = unit(rng) * double(W - g.width);
      s.y = unit(rng) * double(H - g.height);
      // Sprites share the sequence speed; each gets its own heading.
      const double heading = k == 0 ? theta : 2 * std::numbers::pi * unit(rng);
      s.vx = speed * std::cos(heading);
      s.vy = speed * std::sin(heading);
    }
    for (std::size_t t = 0; t < T; ++t) {
      float* frame = frames.data() + (n * T + t) * frame_elems;
      for (const DigitSprite& s : sprites)
        for (std::size_t ch = 0; ch < C; ++ch) stamp_glyph(frame, H, W, C, ch, glyphs[s.glyph], s.x, s.y);
      for (DigitSprite& s : sprites) advance_sprite(s, H, W, glyphs[s.glyph].height, glyphs[s.glyph].width);
    }
  }
  return {std::move(frames), Split::Train, "sprites:seed=" + std::to_string(cfg.seed)};
}

SequenceDataset generate_flow_fields(const FlowConfig& cfg) {
  if (cfg.sequences < 1 || cfg.seq_len < 1 || cfg.blobs < 1 || cfg.channels < 1)
    throw ConfigError("flow generator sizes must be positive");
  const std::size_t H = cfg.height, W = cfg.width, C = cfg.channels, T = cfg.seq_len;
  Tensor<float> frames(Shape{cfg.sequences, T, H, W, C});
  struct Blob {
    double x, y, vx, vy, sigma, amp, phase;
  };
#pragma omp parallel for schedule(static)
  for (std::size_t n = 0; n < cfg.sequences; ++n) {
    std::mt19937_64 rng(splitmix(cfg.seed ^ splitmix(n + 0x51ed)));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Blob> blobs(cfg.blobs);
    for (Blob& b : blobs) {
      const double heading = 2 * std::numbers::pi * unit(rng);
      const double speed = 0.5 + unit(rng);
      b = {unit(rng) * double(W), unit(rng) * double(H), speed * std::cos(heading), speed * std::sin(heading),
           2.0 + 3.0 * unit(rng),  (0.5 + 0.5 * unit(rng)) / double(cfg.blobs), 2 * std::numbers::pi * unit(rng)};
    }
    const double day = 2 * std::numbers::pi * unit(rng);
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x)
          for (std::size_t ch = 0; ch < C; ++ch) {
            double v = 0;
            for (const Blob& b : blobs) {
              // Periodic distance keeps the field stationary on a torus.
              double dx = std::fmod(std::abs(double(x) - (b.x + b.vx * double(t))), double(W));
              double dy = std::fmod(std::abs(double(y) - (b.y + b.vy * double(t))), double(H));
              dx = std::min(dx, double(W) - dx);
              dy = std::min(dy, double(H) - dy);
              const double cycle = 0.6 + 0.4 * std::sin(day + 0.5 * double(t) + b.phase + 0.8 * double(ch));
              v += b.amp * cycle * std::exp(-(dx * dx + dy * dy) / (2 * b.sigma * b.sigma));
            }
            frames[(((n * T + t) * H + y) * W + x) * C + ch] = static_cast<float>(std::clamp(v, 0.0, 1.0));
          }
  }
  return {std::move(frames), Split::Train, "flows:seed=" + std::to_string(cfg.seed)};
}

// ---------------------------------------------------------------------------
// Binary format

namespace {

constexpr char kMagic[4] = {'V', 'M', 'R', 'N'};
constexpr std::uint16_t kVersion = 1;
constexpr std::uint16_t kFloat32 = 1;
constexpr std::size_t kHeaderBytes = 4 + 2 + 2 + 5 * 8;

template <typename U>
void put_le(std::string& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((std::uint64_t(v) >> (8 * i)) & 0xff));
}

template <typename U>
U get_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= std::uint64_t(p[i]) << (8 * i);
  return static_cast<U>(v);
}

template <typename U>
U byteswap_if_big(U v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(U)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<U>(bytes);
  }
  return v;
}

std::vector<unsigned char> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

void save_dataset(const SequenceDataset& ds, const fs::path& path) {
  if (ds.frames.rank() != 5) throw ConfigError("dataset frames must be [N, T, H, W, C]");
  std::string header(kMagic, 4);
  put_le<std::uint16_t>(header, kVersion);
  put_le<std::uint16_t>(header, kFloat32);
  for (std::size_t d : ds.frames.shape()) put_le<std::uint64_t>(header, d);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(ds.frames.data()),
              static_cast<std::streamsize>(ds.frames.numel() * sizeof(float)));
  } else {
    for (float v : ds.frames.vec()) {
      const float le = byteswap_if_big(v);
      out.write(reinterpret_cast<const char*>(&le), sizeof le);
    }
  }
  if (!out) throw FormatError("write failed for " + path.string());
}

SequenceDataset load_dataset(const fs::path& path, Split split) {
  const auto bytes = read_file(path);
  if (bytes.size() < kHeaderBytes) throw FormatError("dataset file truncated in header: " + path.string());
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("bad magic in " + path.string());
  const auto version = get_le<std::uint16_t>(bytes.data() + 4);
  if (version != kVersion) throw FormatError("unsupported dataset version " + std::to_string(version));
  const auto dtype = get_le<std::uint16_t>(bytes.data() + 6);
  if (dtype != kFloat32) throw FormatError("unsupported dataset dtype code " + std::to_string(dtype));
  Shape shape(5);
  std::uint64_t count = 1;
  for (std::size_t i = 0; i < 5; ++i) {
    const auto d = get_le<std::uint64_t>(bytes.data() + 8 + 8 * i);
    if (d == 0) throw FormatError("dataset has a zero dimension");
    if (__builtin_mul_overflow(count, d, &count)) throw FormatError("dataset shape overflows");
    shape[i] = static_cast<std::size_t>(d);
  }
  std::uint64_t payload;
  if (__builtin_mul_overflow(count, std::uint64_t(sizeof(float)), &payload))
    throw FormatError("dataset shape overflows");
  if (bytes.size() - kHeaderBytes < payload) throw FormatError("dataset file truncated: " + path.string());
  if (bytes.size() - kHeaderBytes > payload) throw FormatError("trailing bytes after dataset payload");
  Tensor<float> frames(shape);
  std::memcpy(frames.data(), bytes.data() + kHeaderBytes, payload);
  if constexpr (std::endian::native == std::endian::big)
    for (float& v : frames.vec()) v = byteswap_if_big(v);
  for (std::size_t i = 0; i < frames.numel(); ++i)
    if (!(frames[i] >= 0.0f && frames[i] <= 1.0f)) throw FormatError("dataset value outside [0, 1] at " + std::to_string(i));
  const std::string prov = "file:" + hex_digest(dataset_digest(frames));
  return {std::move(frames), split, prov};
}

// ---------------------------------------------------------------------------
// External grids

void LayoutSpec::validate() const {
  if (frames == 0 || height == 0 || width == 0 || channels == 0) throw ConfigError("layout dims must be positive");
  if (dtype != "float32" && dtype != "float64" && dtype != "uint8" && dtype != "uint16" && dtype != "int32")
    throw ConfigError("unsupported layout dtype '" + dtype + "'");
  if (channel_order != "hwc" && channel_order != "chw")
    throw ConfigError("channel_order must be hwc or chw");
  if (!(upper > lower)) throw ConfigError("layout bounds need upper > lower");
  if (window < 1 || stride < 1) throw ConfigError("window and stride must be positive");
  if (window > frames) throw ConfigError("window longer than the series");
}

namespace {

std::size_t dtype_bytes(const std::string& dtype) {
  if (dtype == "float64") return 8;
  if (dtype == "uint8") return 1;
  if (dtype == "uint16") return 2;
  return 4;
}

double read_value(const unsigned char* p, const std::string& dtype) {
  if (dtype == "float32") return std::bit_cast<float>(get_le<std::uint32_t>(p));
  if (dtype == "float64") return std::bit_cast<double>(get_le<std::uint64_t>(p));
  if (dtype == "uint8") return p[0];
  if (dtype == "uint16") return get_le<std::uint16_t>(p);
  return static_cast<std::int32_t>(get_le<std::uint32_t>(p));
}

}  // namespace

SequenceDataset load_external_grid(const fs::path& path, const LayoutSpec& spec, Split split) {
  spec.validate();
  const auto bytes = read_file(path);
  const std::size_t T = spec.frames, H = spec.height, W = spec.width, C = spec.channels;
  const std::size_t elem = dtype_bytes(spec.dtype), frame_elems = H * W * C;
  const std::size_t expected = spec.header_bytes + T * frame_elems * elem;
  if (bytes.size() != expected)
    throw ConfigError("layout mismatch: expected " + std::to_string(expected) + " bytes, file has " +
                      std::to_string(bytes.size()));

  std::vector<float> series(T * frame_elems);
  const double span = spec.upper - spec.lower;
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x)
        for (std::size_t c = 0; c < C; ++c) {
          const std::size_t src = spec.channel_order == "hwc" ? ((y * W + x) * C + c) : ((c * H + y) * W + x);
          const double v = read_value(bytes.data() + spec.header_bytes + (t * frame_elems + src) * elem, spec.dtype);
          if (!(v >= spec.lower && v <= spec.upper))
            throw FormatError("value " + std::to_string(v) + " outside declared bounds at frame " + std::to_string(t));
          series[t * frame_elems + (y * W + x) * C + c] = static_cast<float>((v - spec.lower) / span);
        }

  const std::size_t clips = (T - spec.window) / spec.stride + 1;
  Tensor<float> frames(Shape{clips, spec.window, H, W, C});
  for (std::size_t k = 0; k < clips; ++k)
    std::memcpy(frames.data() + k * spec.window * frame_elems, series.data() + k * spec.stride * frame_elems,
                spec.window * frame_elems * sizeof(float));
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return {std::move(frames), split, "grid:" + hex_digest(h)};
}

}  // namespace vmrnn
