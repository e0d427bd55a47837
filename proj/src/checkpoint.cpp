// SPDX-License-Identifier: Apache-2.0
#include "vmrnn/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "json.hpp"
#include "vmrnn/config.hpp"

namespace vmrnn {

namespace {

constexpr char kMagic[4] = {'V', 'M', 'R', 'C'};
constexpr std::uint16_t kVersion = 1;
constexpr std::uint16_t kFloat32 = 1;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename U>
void put(std::string& out, U v) {
  char buf[sizeof(U)];
  std::memcpy(buf, &v, sizeof(U));
  out.append(buf, sizeof(U));
}

class Reader {
 public:
  explicit Reader(std::vector<char> bytes) : bytes_(std::move(bytes)) {}

  template <typename U>
  U get() {
    U v;
    std::memcpy(&v, take(sizeof(U)), sizeof(U));
    return v;
  }
  std::string str(std::size_t n) { return std::string(take(n), n); }
  const char* take(std::size_t n) {
    if (bytes_.size() - pos_ < n) throw FormatError("checkpoint truncated");
    const char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::vector<char> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, VmrnnModel<float>& model, const CheckpointMeta& meta) {
  nlohmann::json m = {{"model", nlohmann::json::parse(to_json(model.config()))},
                      {"seed", meta.seed},
                      {"epoch", meta.epoch},
                      {"step", meta.step},
                      {"tag", meta.tag}};
  if (std::isfinite(meta.val_mse)) m["val_mse"] = meta.val_mse;
  const std::string text = m.dump();

  std::string out(kMagic, 4);
  put<std::uint16_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  auto params = model.named_parameters();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (auto& [name, var] : params) {
    put<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out += name;
    put<std::uint16_t>(out, kFloat32);
    const Tensor<float>& v = var.value();
    put<std::uint16_t>(out, static_cast<std::uint16_t>(v.rank()));
    for (std::size_t d : v.shape()) put<std::uint64_t>(out, d);
    out.append(reinterpret_cast<const char*>(v.data()), v.numel() * sizeof(float));
  }

  // Write to a sibling file first so an interrupted save never clobbers a good checkpoint.
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw FormatError("cannot write checkpoint " + tmp);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw FormatError("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open checkpoint " + path.string());
  Reader r(std::vector<char>{std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()});
  if (std::memcmp(r.take(4), kMagic, 4) != 0) throw FormatError("not a checkpoint: " + path.string());
  if (r.get<std::uint16_t>() != kVersion) throw FormatError("unsupported checkpoint version");
  const std::string text = r.str(r.get<std::uint32_t>());

  CheckpointMeta meta;
  try {
    const auto m = nlohmann::json::parse(text);
    meta.model = model_config_from_json(m.at("model").dump());
    meta.seed = m.at("seed").get<std::uint64_t>();
    meta.epoch = m.at("epoch").get<std::size_t>();
    meta.step = m.at("step").get<std::size_t>();
    meta.tag = m.at("tag").get<std::string>();
    if (m.contains("val_mse")) meta.val_mse = m["val_mse"].get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad checkpoint metadata: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("bad checkpoint model config: ") + e.what());
  }

  std::map<std::string, Tensor<float>> arrays;
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.str(r.get<std::uint16_t>());
    if (r.get<std::uint16_t>() != kFloat32) throw FormatError("unsupported dtype for " + name);
    Shape shape(r.get<std::uint16_t>());
    for (auto& d : shape) d = static_cast<std::size_t>(r.get<std::uint64_t>());
    Tensor<float> t(shape);
    std::memcpy(t.data(), r.take(t.numel() * sizeof(float)), t.numel() * sizeof(float));
    if (!arrays.emplace(name, std::move(t)).second) throw FormatError("duplicate array " + name);
  }
  if (!r.done()) throw FormatError("trailing bytes in checkpoint");

  LoadedCheckpoint out{VmrnnModel<float>(meta.model, meta.seed), meta};
  auto params = out.model.named_parameters();
  if (params.size() != arrays.size())
    throw FormatError("checkpoint has " + std::to_string(arrays.size()) + " arrays, model expects " +
                      std::to_string(params.size()));
  for (auto& [name, var] : params) {
    auto it = arrays.find(name);
    if (it == arrays.end()) throw FormatError("checkpoint is missing " + name);
    if (it->second.shape() != var.shape())
      throw FormatError("shape mismatch for " + name + ": " + shape_str(it->second.shape()) + " vs " +
                        shape_str(var.shape()));
    var.mutable_value() = std::move(it->second);
  }
  return out;
}

}  // namespace vmrnn
