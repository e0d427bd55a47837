// SPDX-License-Identifier: Apache-2.0
#include "vmrnn/model.hpp"

#include <memory>

namespace vmrnn {

Variant parse_variant(const std::string& name) {
  if (name == "B" || name == "b") return Variant::Base;
  if (name == "D" || name == "d") return Variant::Deep;
  throw ConfigError("unknown model variant '" + name + "' (expected B | D)");
}

std::string to_string(Variant v) { return v == Variant::Base ? "B" : "D"; }

void ModelConfig::validate() const {
  if (patch_size < 1) throw ConfigError("patch_size must be >= 1");
  if (embed_dim < 1 || in_channels < 1 || state_dim < 1) throw ConfigError("embed_dim, in_channels, state_dim must be >= 1");
  const std::size_t unit = variant == Variant::Base ? patch_size : patch_size * 4;
  if (height % unit || width % unit || height == 0 || width == 0)
    throw ConfigError("resolution " + std::to_string(height) + "x" + std::to_string(width) + " not divisible by " +
                      std::to_string(unit) + (variant == Variant::Deep ? " (patch size x 4 for variant D)" : ""));
  if (vsb_depths.size() != cell_count())
    throw ConfigError("variant " + to_string(variant) + " needs " + std::to_string(cell_count()) +
                      " VSS depths, got " + std::to_string(vsb_depths.size()));
  for (std::size_t d : vsb_depths)
    if (d < 1) throw ConfigError("every VSS depth must be >= 1");
}

void RolloutPlan::validate() const {
  if (observe < 1 || horizon < 1) throw ConfigError("rollout plan needs observe >= 1 and horizon >= 1");
}

template <typename T>
ModelParams<T> init_model_params(const ModelConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  const std::size_t C = cfg.embed_dim, P = cfg.patch_size;
  auto cell = [&](std::size_t channels, std::size_t depth) {
    VssShape vss;
    vss.channels = channels;
    vss.state_dim = cfg.state_dim;
    vss.conv = cfg.conv_variant;
    return init_cell_params<T>(CellShape{vss, depth}, rng);
  };
  ModelParams<T> p;
  p.embed = LinearParams<T>::init(P * P * cfg.in_channels, C, true, rng);
  if (cfg.variant == Variant::Base) {
    p.cells.push_back(cell(C, cfg.vsb_depths[0]));
  } else {
    const std::size_t widths[4] = {C, 2 * C, 2 * C, C};
    for (std::size_t i = 0; i < 4; ++i) p.cells.push_back(cell(widths[i], cfg.vsb_depths[i]));
    for (std::size_t w : {C, 2 * C})
      p.merges.push_back({LayerNormParams<T>::init(4 * w), LinearParams<T>::init(4 * w, 2 * w, false, rng)});
    for (std::size_t w : {4 * C, 2 * C}) p.expands.push_back(LinearParams<T>::init(w, 2 * w, false, rng));
  }
  p.recon = LinearParams<T>::init(C, P * P * cfg.in_channels, true, rng);
  return p;
}

template <typename T>
Var<T> patch_embed(const Var<T>& frame, std::size_t patch, const LinearParams<T>& proj) {
  if (frame.shape().size() != 4) throw ConfigError("patch_embed: expected [B, H, W, C] frame");
  const std::size_t B = frame.dim(0), H = frame.dim(1), W = frame.dim(2), C = frame.dim(3), P = patch;
  if (P < 1 || H % P || W % P)
    throw ConfigError("patch_embed: " + std::to_string(H) + "x" + std::to_string(W) + " not divisible by patch " +
                      std::to_string(P));
  const std::size_t Hp = H / P, Wp = W / P, F = P * P * C;
  auto idx = std::make_shared<std::vector<std::size_t>>(B * Hp * Wp * F);
  std::size_t o = 0;
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t py = 0; py < Hp; ++py)
      for (std::size_t px = 0; px < Wp; ++px)
        for (std::size_t dy = 0; dy < P; ++dy)
          for (std::size_t dx = 0; dx < P; ++dx)
            for (std::size_t c = 0; c < C; ++c) (*idx)[o++] = ((b * H + py * P + dy) * W + px * P + dx) * C + c;
  return proj(gather(frame, idx, Shape{B, Hp * Wp, F}));
}

template <typename T>
std::pair<Var<T>, GridShape> patch_merge(const Var<T>& tokens, GridShape grid, const PatchMergeParams<T>& p) {
  if (tokens.shape().size() != 3 || tokens.dim(1) != grid.tokens())
    throw ConfigError("patch_merge: tokens do not match grid");
  if (grid.height % 2 || grid.width % 2) throw ConfigError("patch_merge: grid sides must be even");
  const std::size_t B = tokens.dim(0), C = tokens.dim(2), H = grid.height, W = grid.width;
  const GridShape out{H / 2, W / 2};
  // Neighbour order (dy, dx): (0,0), (1,0), (0,1), (1,1).
  constexpr std::size_t kDy[4] = {0, 1, 0, 1}, kDx[4] = {0, 0, 1, 1};
  auto idx = std::make_shared<std::vector<std::size_t>>(B * out.tokens() * 4 * C);
  std::size_t o = 0;
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t y = 0; y < out.height; ++y)
      for (std::size_t x = 0; x < out.width; ++x)
        for (std::size_t q = 0; q < 4; ++q)
          for (std::size_t c = 0; c < C; ++c)
            (*idx)[o++] = ((b * H + 2 * y + kDy[q]) * W + 2 * x + kDx[q]) * C + c;
  const Var<T> gathered = gather(tokens, idx, Shape{B, out.tokens(), 4 * C});
  return {p.reduction(p.norm(gathered)), out};
}

template <typename T>
std::pair<Var<T>, GridShape> patch_expand(const Var<T>& tokens, GridShape grid, const LinearParams<T>& proj) {
  if (tokens.shape().size() != 3 || tokens.dim(1) != grid.tokens())
    throw ConfigError("patch_expand: tokens do not match grid");
  const std::size_t B = tokens.dim(0), C = tokens.dim(2);
  if (C % 2) throw ConfigError("patch_expand: channel count must be even");
  const Var<T> wide = proj(tokens);  // [B, L, 2C]
  const std::size_t Co = C / 2, H = grid.height, W = grid.width;
  const GridShape out{2 * H, 2 * W};
  auto idx = std::make_shared<std::vector<std::size_t>>(B * out.tokens() * Co);
  std::size_t o = 0;
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t Y = 0; Y < out.height; ++Y)
      for (std::size_t X = 0; X < out.width; ++X)
        for (std::size_t c = 0; c < Co; ++c)
          (*idx)[o++] = ((b * H + Y / 2) * W + X / 2) * (2 * C) + ((Y % 2) * 2 + X % 2) * Co + c;
  return {gather(wide, idx, Shape{B, out.tokens(), Co}), out};
}

template <typename T>
Var<T> reconstruct(const Var<T>& tokens, GridShape grid, std::size_t patch, std::size_t in_channels,
                   const LinearParams<T>& proj) {
  if (tokens.shape().size() != 3 || tokens.dim(1) != grid.tokens())
    throw ConfigError("reconstruct: tokens do not match grid");
  const std::size_t P = patch, Cin = in_channels;
  if (proj.weight.dim(1) != P * P * Cin) throw ConfigError("reconstruct: projection width != P*P*C_in");
  const Var<T> pixels = proj(tokens);  // [B, L, P*P*Cin]
  const std::size_t B = tokens.dim(0), H = grid.height * P, W = grid.width * P;
  auto idx = std::make_shared<std::vector<std::size_t>>(B * H * W * Cin);
  std::size_t o = 0;
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x)
        for (std::size_t c = 0; c < Cin; ++c)
          (*idx)[o++] = ((b * grid.height + y / P) * grid.width + x / P) * (P * P * Cin) + ((y % P) * P + x % P) * Cin + c;
  return gather(pixels, idx, Shape{B, H, W, Cin});
}

namespace {

void check_states(std::size_t have, std::size_t want) {
  if (have != want)
    throw ConfigError("model needs " + std::to_string(want) + " cell states, got " + std::to_string(have));
}

template <typename T>
void check_frame(const Var<T>& frame, const ModelConfig& cfg) {
  if (frame.shape().size() != 4 || frame.dim(1) != cfg.height || frame.dim(2) != cfg.width ||
      frame.dim(3) != cfg.in_channels)
    throw ConfigError("frame " + shape_str(frame.shape()) + " does not match model resolution " +
                      std::to_string(cfg.height) + "x" + std::to_string(cfg.width) + "x" +
                      std::to_string(cfg.in_channels));
}

}  // namespace

template <typename T>
Var<T> forward_step_b(const Var<T>& frame, ModelStates<T>& states, const ModelParams<T>& params,
                      const ModelConfig& cfg, ScanOptions opt) {
  check_states(states.size(), 1);
  check_frame(frame, cfg);
  const GridShape grid = cfg.token_grid();
  const Var<T> tokens = patch_embed(frame, cfg.patch_size, params.embed);
  auto [h, next] = cell_step(tokens, grid, states[0], params.cells[0], opt);
  states[0] = next;
  return reconstruct(h, grid, cfg.patch_size, cfg.in_channels, params.recon);
}

template <typename T>
Var<T> forward_step_d(const Var<T>& frame, ModelStates<T>& states, const ModelParams<T>& params,
                      const ModelConfig& cfg, ScanOptions opt) {
  check_states(states.size(), 4);
  check_frame(frame, cfg);
  const GridShape g1 = cfg.token_grid();
  const Var<T> tokens = patch_embed(frame, cfg.patch_size, params.embed);

  auto [h1, s1] = cell_step(tokens, g1, states[0], params.cells[0], opt);
  states[0] = s1;
  auto [down1, g2] = patch_merge(h1, g1, params.merges[0]);
  auto [h2, s2] = cell_step(down1, g2, states[1], params.cells[1], opt);
  states[1] = s2;
  auto [down2, g3] = patch_merge(h2, g2, params.merges[1]);

  auto [up1, g2u] = patch_expand(down2, g3, params.expands[0]);
  auto [h3, s3] = cell_step(add(up1, h2), g2u, states[2], params.cells[2], opt);
  states[2] = s3;
  auto [up2, g1u] = patch_expand(h3, g2u, params.expands[1]);
  auto [h4, s4] = cell_step(add(up2, h1), g1u, states[3], params.cells[3], opt);
  states[3] = s4;
  return reconstruct(h4, g1u, cfg.patch_size, cfg.in_channels, params.recon);
}

template <typename T>
Tensor<T> frame_at(const Tensor<T>& frames, std::size_t t) {
  if (frames.rank() != 5) throw ConfigError("frame_at: expected [B, T, H, W, C]");
  const std::size_t B = frames.dim(0), steps = frames.dim(1);
  if (t >= steps) throw ConfigError("frame_at: time index out of range");
  const std::size_t per = frames.dim(2) * frames.dim(3) * frames.dim(4);
  Tensor<T> out(Shape{B, frames.dim(2), frames.dim(3), frames.dim(4)});
  for (std::size_t b = 0; b < B; ++b)
    std::copy_n(frames.data() + (b * steps + t) * per, per, out.data() + b * per);
  return out;
}

template <typename T>
Tensor<T> stack_frames(const std::vector<Var<T>>& frames) {
  if (frames.empty()) return Tensor<T>();
  const Shape& s = frames.front().shape();
  const std::size_t B = s[0], steps = frames.size(), per = s[1] * s[2] * s[3];
  Tensor<T> out(Shape{B, steps, s[1], s[2], s[3]});
  for (std::size_t t = 0; t < steps; ++t)
    for (std::size_t b = 0; b < B; ++b)
      std::copy_n(frames[t].value().data() + b * per, per, out.data() + (b * steps + t) * per);
  return out;
}

template <typename T>
VmrnnModel<T>::VmrnnModel(ModelConfig cfg, std::uint64_t seed) : config_(std::move(cfg)), seed_(seed) {
  std::mt19937_64 rng(seed);
  params_ = init_model_params<T>(config_, rng);
}

template <typename T>
Var<T> VmrnnModel<T>::step(const Var<T>& frame, ModelStates<T>& states) const {
  return config_.variant == Variant::Base ? forward_step_b(frame, states, params_, config_, scan_options)
                                          : forward_step_d(frame, states, params_, config_, scan_options);
}

template <typename T>
std::vector<Var<T>> VmrnnModel<T>::rollout_outputs(const Tensor<T>& frames, const RolloutPlan& plan) const {
  plan.validate();
  if (frames.rank() != 5) throw ConfigError("rollout: expected [B, T, H, W, C] frames");
  if (frames.dim(1) < plan.observe)
    throw ConfigError("rollout: " + std::to_string(frames.dim(1)) + " input frames, plan observes " +
                      std::to_string(plan.observe));
  ModelStates<T> states = initial_states();
  std::vector<Var<T>> outputs;
  outputs.reserve(plan.steps());
  for (std::size_t t = 0; t < plan.observe; ++t) outputs.push_back(step(Var<T>::constant(frame_at(frames, t)), states));
  for (std::size_t k = 1; k < plan.horizon; ++k) {
    const Var<T> fed = outputs.back();
    outputs.push_back(step(fed, states));
  }
  return outputs;
}

template <typename T>
std::vector<Var<T>> VmrnnModel<T>::rollout(const Tensor<T>& frames, const RolloutPlan& plan) const {
  auto all = rollout_outputs(frames, plan);
  return std::vector<Var<T>>(all.end() - static_cast<std::ptrdiff_t>(plan.horizon), all.end());
}

template <typename T>
std::vector<std::pair<std::string, Var<T>>> VmrnnModel<T>::named_parameters() {
  std::vector<std::pair<std::string, Var<T>>> out;
  params_.visit([&](const std::string& name, Var<T>& v) { out.emplace_back(name, v); });
  return out;
}

template <typename T>
std::size_t VmrnnModel<T>::parameter_count() const {
  std::size_t n = 0;
  const_cast<ModelParams<T>&>(params_).visit([&](const std::string&, Var<T>& v) { n += v.numel(); });
  return n;
}

#define VMRNN_INSTANTIATE_MODEL(T)                                                                                \
  template ModelParams<T> init_model_params<T>(const ModelConfig&, std::mt19937_64&);                             \
  template Var<T> patch_embed<T>(const Var<T>&, std::size_t, const LinearParams<T>&);                             \
  template std::pair<Var<T>, GridShape> patch_merge<T>(const Var<T>&, GridShape, const PatchMergeParams<T>&);     \
  template std::pair<Var<T>, GridShape> patch_expand<T>(const Var<T>&, GridShape, const LinearParams<T>&);        \
  template Var<T> reconstruct<T>(const Var<T>&, GridShape, std::size_t, std::size_t, const LinearParams<T>&);     \
  template Var<T> forward_step_b<T>(const Var<T>&, ModelStates<T>&, const ModelParams<T>&, const ModelConfig&,    \
                                    ScanOptions);                                                                 \
  template Var<T> forward_step_d<T>(const Var<T>&, ModelStates<T>&, const ModelParams<T>&, const ModelConfig&,    \
                                    ScanOptions);                                                                 \
  template Tensor<T> frame_at<T>(const Tensor<T>&, std::size_t);                                                  \
  template Tensor<T> stack_frames<T>(const std::vector<Var<T>>&);                                                 \
  template class VmrnnModel<T>;

VMRNN_INSTANTIATE_MODEL(float)
VMRNN_INSTANTIATE_MODEL(double)

}  // namespace vmrnn
