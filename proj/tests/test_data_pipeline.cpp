// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include "support/fixtures.hpp"
#include "vmrnn/data.hpp"
#include "vmrnn/errors.hpp"
#include "vmrnn/train.hpp"

using namespace vmrnn;
namespace fs = std::filesystem;

namespace {

std::vector<unsigned char> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void dump(const fs::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

template <typename V>
void write_raw(const fs::path& p, const std::vector<V>& values, std::size_t header = 0) {
  std::vector<unsigned char> bytes(header, 0xAB);
  const auto* raw = reinterpret_cast<const unsigned char*>(values.data());
  bytes.insert(bytes.end(), raw, raw + values.size() * sizeof(V));
  dump(p, bytes);
}

SpriteConfig small_sprites(std::uint64_t seed = 7) {
  SpriteConfig c;
  c.seed = seed;
  c.sequences = 6;
  c.seq_len = 12;
  c.height = c.width = 32;
  return c;
}

}  // namespace

TEST_CASE("sprite kinematics") {
  SUBCASE("free flight moves by the velocity") {
    DigitSprite s{0, 10.0, 5.0, 1.5, -0.5};
    advance_sprite(s, 64, 64, 20, 20);
    CHECK(s.x == 11.5);
    CHECK(s.y == 4.5);
    CHECK(s.vx == 1.5);
    CHECK(s.vy == -0.5);
  }
  SUBCASE("reflection off the right and top walls") {
    DigitSprite s{0, 43.0, 1.0, 3.0, -2.0};
    advance_sprite(s, 64, 64, 20, 20);  // x limit 44, y limit 44
    CHECK(s.x == 42.0);
    CHECK(s.vx == -3.0);
    CHECK(s.y == 1.0);
    CHECK(s.vy == 2.0);
  }
  SUBCASE("long runs keep speed and stay inside the canvas") {
    DigitSprite s{0, 3.0, 7.0, 3.7, -2.9};
    const double speed = std::hypot(s.vx, s.vy);
    for (int t = 0; t < 500; ++t) {
      advance_sprite(s, 40, 50, 12, 9);
      REQUIRE(s.x >= 0);
      REQUIRE(s.x <= 41);
      REQUIRE(s.y >= 0);
      REQUIRE(s.y <= 28);
      REQUIRE(std::hypot(s.vx, s.vy) == doctest::Approx(speed).epsilon(1e-12));
    }
  }
}

TEST_CASE("glyphs") {
  const auto g = procedural_glyphs(14);
  REQUIRE(g.size() == 10);
  std::set<std::vector<float>> distinct;
  for (const auto& x : g) {
    CHECK(x.height == 14);
    CHECK(x.width == 14);
    distinct.insert(x.pixels);
    for (float v : x.pixels) CHECK((v == 0.0f || v == 1.0f));
  }
  CHECK(distinct.size() == 10);
  CHECK_THROWS_AS(procedural_glyphs(3), ConfigError);
}

TEST_CASE("glyph sheet loading") {
  fixtures::TempDir dir("glyphs");
  std::vector<unsigned char> sheet = {'P', '5', '\n', '2', ' ', '1', '\n', '2', '5', '5', '\n'};
  sheet.push_back(255);
  sheet.push_back(0);
  dump(dir / "ok.pgm", sheet);
  const auto g = load_glyph_sheet(dir / "ok.pgm");
  REQUIRE(g.size() == 2);
  CHECK(g[0].at(0, 0) == 1.0f);
  CHECK(g[1].at(0, 0) == 0.0f);
  sheet.pop_back();
  dump(dir / "short.pgm", sheet);
  CHECK_THROWS_AS(load_glyph_sheet(dir / "short.pgm"), FormatError);
  CHECK_THROWS_AS(load_glyph_sheet(dir / "missing.pgm"), FormatError);
}

TEST_CASE("stamping composites with max and clips at the border") {
  Glyph g{2, 2, {0.5f, 1.0f, 0.25f, 0.75f}};
  std::vector<float> frame(4 * 4 * 2, 0.0f);
  frame[(1 * 4 + 1) * 2 + 1] = 0.9f;
  stamp_glyph(frame.data(), 4, 4, 2, 1, g, 0.6, 0.4);  // rounds to (x=1, y=0)
  CHECK(frame[(0 * 4 + 1) * 2 + 1] == 0.5f);
  CHECK(frame[(0 * 4 + 2) * 2 + 1] == 1.0f);
  CHECK(frame[(1 * 4 + 1) * 2 + 1] == 0.9f);  // max keeps the brighter pixel
  CHECK(frame[(1 * 4 + 2) * 2 + 1] == 0.75f);
  for (std::size_t i = 0; i < frame.size(); i += 2) CHECK(frame[i] == 0.0f);
  stamp_glyph(frame.data(), 4, 4, 2, 0, g, 3.0, 3.0);  // only the top-left pixel lands
  CHECK(frame[(3 * 4 + 3) * 2] == 0.5f);
}

TEST_CASE("moving sprites") {
  const auto cfg = small_sprites();
  const auto a = generate_moving_sprites(cfg), b = generate_moving_sprites(cfg);
  CHECK(a.frames.shape() == Shape{6, 12, 32, 32, 1});
  CHECK(std::memcmp(a.frames.data(), b.frames.data(), a.frames.numel() * sizeof(float)) == 0);
  CHECK(dataset_digest(a.frames) == dataset_digest(b.frames));
  for (float v : a.frames.vec()) REQUIRE((v >= 0.0f && v <= 1.0f));

  auto other = cfg;
  other.seed = cfg.seed + 1;
  CHECK(dataset_digest(generate_moving_sprites(other).frames) != dataset_digest(a.frames));

  // Each sequence depends only on (seed, index): a longer run starts with the same clips.
  auto more = cfg;
  more.sequences = 9;
  const auto m = generate_moving_sprites(more);
  CHECK(std::memcmp(m.frames.data(), a.frames.data(), a.frames.numel() * sizeof(float)) == 0);

  // Frames are not static: consecutive frames differ somewhere.
  const std::size_t fs = 32 * 32;
  double moved = 0;
  for (std::size_t i = 0; i < fs; ++i) moved += std::fabs(a.frames[fs + i] - a.frames[i]);
  CHECK(moved > 0);

  auto bad = cfg;
  bad.sprites = 0;
  CHECK_THROWS_AS(generate_moving_sprites(bad), ConfigError);
  bad = cfg;
  bad.glyph_size = 40;
  CHECK_THROWS_AS(generate_moving_sprites(bad), ConfigError);
}

TEST_CASE("flow fields") {
  FlowConfig c;
  c.sequences = 3;
  const auto a = generate_flow_fields(c), b = generate_flow_fields(c);
  CHECK(a.frames.shape() == Shape{3, 8, 32, 32, 2});
  CHECK(dataset_digest(a.frames) == dataset_digest(b.frames));
  for (float v : a.frames.vec()) REQUIRE((v >= 0.0f && v <= 1.0f));
}

TEST_CASE("dataset file format") {
  fixtures::TempDir dir("ds");
  auto ds = generate_moving_sprites(small_sprites());
  ds.split = Split::Val;
  const auto path = dir / "d.vmrn";
  save_dataset(ds, path);
  CHECK(fs::file_size(path) == 48 + 6 * 12 * 32 * 32 * 1 * 4);
  const auto back = load_dataset(path, Split::Val);
  CHECK(back.frames.shape() == ds.frames.shape());
  CHECK(std::memcmp(back.frames.data(), ds.frames.data(), ds.frames.numel() * sizeof(float)) == 0);
  CHECK(back.split == Split::Val);

  const auto good = slurp(path);
  auto bytes = good;
  bytes[0] = 'X';
  dump(dir / "magic.vmrn", bytes);
  CHECK_THROWS_AS(load_dataset(dir / "magic.vmrn"), FormatError);
  bytes = good;
  bytes[4] = 9;
  dump(dir / "version.vmrn", bytes);
  CHECK_THROWS_AS(load_dataset(dir / "version.vmrn"), FormatError);
  bytes = good;
  bytes.pop_back();
  dump(dir / "short.vmrn", bytes);
  CHECK_THROWS_AS(load_dataset(dir / "short.vmrn"), FormatError);
  bytes = good;
  bytes.push_back(0);
  dump(dir / "long.vmrn", bytes);
  CHECK_THROWS_AS(load_dataset(dir / "long.vmrn"), FormatError);
  bytes = good;
  const float big = 2.0f;
  std::memcpy(bytes.data() + 48, &big, 4);
  dump(dir / "range.vmrn", bytes);
  CHECK_THROWS_AS(load_dataset(dir / "range.vmrn"), FormatError);
  CHECK_THROWS_AS(load_dataset(dir / "absent.vmrn"), FormatError);
}

TEST_CASE("batches and slices") {
  const auto ds = generate_moving_sprites(small_sprites());
  const std::size_t seq = 12 * 32 * 32;
  const auto b = ds.batch({4, 1});
  CHECK(b.shape() == Shape{2, 12, 32, 32, 1});
  CHECK(std::memcmp(b.data(), ds.frames.data() + 4 * seq, seq * sizeof(float)) == 0);
  CHECK(std::memcmp(b.data() + seq, ds.frames.data() + seq, seq * sizeof(float)) == 0);
  CHECK_THROWS_AS(ds.batch({6}), ConfigError);
  const auto s = ds.slice(2, 3);
  CHECK(s.size() == 3);
  CHECK(std::memcmp(s.frames.data(), ds.frames.data() + 2 * seq, 3 * seq * sizeof(float)) == 0);
  CHECK_THROWS_AS(ds.slice(5, 2), ConfigError);
  CHECK(parse_split("val") == Split::Val);
  CHECK(to_string(Split::Test) == "test");
  CHECK_THROWS_AS(parse_split("dev"), ConfigError);
}

TEST_CASE("external grids") {
  fixtures::TempDir dir("grid");
  LayoutSpec spec;
  spec.frames = 12;
  spec.height = 3;
  spec.width = 2;
  spec.channels = 2;
  spec.window = 8;

  SUBCASE("sliding windows and exact normalization") {
    std::vector<float> v(12 * 3 * 2 * 2);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 10.0f + float(i % 17);
    spec.lower = 10.0;
    spec.upper = 26.0;
    write_raw(dir / "s.raw", v);
    const auto ds = load_external_grid(dir / "s.raw", spec);
    CHECK(ds.frames.shape() == Shape{5, 8, 3, 2, 2});
    float lo = 1, hi = 0;
    for (float x : ds.frames.vec()) lo = std::min(lo, x), hi = std::max(hi, x);
    CHECK(lo == 0.0f);
    CHECK(hi == 1.0f);
    // Clip k starts at frame k.
    const std::size_t fe = 12;
    for (std::size_t k = 0; k < 5; ++k)
      CHECK(ds.frames[k * 8 * fe] == float((v[k * fe] - 10.0) / 16.0));
    spec.stride = 2;
    CHECK(load_external_grid(dir / "s.raw", spec).size() == 3);
  }
  SUBCASE("channel-first frames and a skipped header") {
    spec.dtype = "uint8";
    spec.channel_order = "chw";
    spec.header_bytes = 5;
    spec.upper = 255;
    std::vector<std::uint8_t> v(12 * 12);
    for (std::size_t t = 0; t < 12; ++t)
      for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t p = 0; p < 6; ++p) v[t * 12 + c * 6 + p] = std::uint8_t(c * 100 + p);
    write_raw(dir / "c.raw", v, 5);
    const auto ds = load_external_grid(dir / "c.raw", spec);
    for (std::size_t p = 0; p < 6; ++p) {
      CHECK(ds.frames[p * 2] == float(p / 255.0));
      CHECK(ds.frames[p * 2 + 1] == float((100 + p) / 255.0));
    }
  }
  SUBCASE("mismatches are reported") {
    write_raw(dir / "s.raw", std::vector<float>(12 * 12 - 1, 0.5f));
    CHECK_THROWS_AS(load_external_grid(dir / "s.raw", spec), ConfigError);
    write_raw(dir / "o.raw", std::vector<float>(12 * 12, 1.5f));
    CHECK_THROWS_AS(load_external_grid(dir / "o.raw", spec), FormatError);
    spec.window = 13;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec.window = 8;
    spec.dtype = "bfloat16";
    CHECK_THROWS_AS(spec.validate(), ConfigError);
  }
  SUBCASE("a constant series makes copy-last exact") {
    write_raw(dir / "k.raw", std::vector<float>(12 * 12, 0.3f));
    const auto ds = load_external_grid(dir / "k.raw", spec);
    const auto r = copy_last_baseline(ds, RolloutPlan{4, 4}, ErrorConvention::PerFrameSum);
    CHECK(r.mse == 0.0);
    CHECK(r.mae == 0.0);
    CHECK(r.ssim == 1.0);
  }
}
