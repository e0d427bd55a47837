// SPDX-License-Identifier: Apache-2.0
#include "vmrnn/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace vmrnn {

using json = nlohmann::json;

void OptimConfig::validate() const {
  if (!(learning_rate >= 0)) throw ConfigError("optim.learning_rate must be >= 0");
  if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1)) throw ConfigError("optim betas must lie in [0, 1)");
  if (!(eps > 0)) throw ConfigError("optim.eps must be > 0");
  if (!(min_lr >= 0)) throw ConfigError("optim.min_lr must be >= 0");
  if (!(grad_clip >= 0)) throw ConfigError("optim.grad_clip must be >= 0");
  if (schedule != "cosine" && schedule != "constant") throw ConfigError("optim.schedule must be cosine or constant");
}

void DataConfig::validate() const {
  if (source != "sprites" && source != "flows" && source != "file")
    throw ConfigError("data.source must be sprites, flows or file");
  if (source == "file" && train_path.empty()) throw ConfigError("data.source=file needs data.train_path");
  if (train_sequences < 1) throw ConfigError("data.train_sequences must be >= 1");
  if (seq_len < 2) throw ConfigError("data.seq_len must be >= 2");
  if (sprites < 1) throw ConfigError("data.sprites must be >= 1");
}

void TrainConfig::validate() const {
  model.validate();
  plan.validate();
  eval_plan.validate();
  optim.validate();
  data.validate();
  if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (data.source != "file" && data.seq_len < std::max(plan.observe + plan.horizon, eval_plan.observe + eval_plan.horizon))
    throw ConfigError("data.seq_len " + std::to_string(data.seq_len) + " is shorter than the rollout plans need");
}

// ---------------------------------------------------------------------------
// Presets

namespace {

TrainConfig base_preset(std::string name, Variant v, std::vector<std::size_t> depths, std::size_t patch,
                        std::size_t h, std::size_t w, std::size_t c, std::size_t embed) {
  TrainConfig t;
  t.name = std::move(name);
  t.model.variant = v;
  t.model.vsb_depths = std::move(depths);
  t.model.patch_size = patch;
  t.model.height = h;
  t.model.width = w;
  t.model.in_channels = c;
  t.model.embed_dim = embed;
  t.data.seed = 1234;
  t.out_dir = "runs/" + t.name;
  return t;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"mnist-d", "kth20-b", "kth40-b", "taxibj-b", "mnist-mini", "taxibj-synth"};
}

TrainConfig preset(const std::string& name) {
  if (name == "mnist-d") {
    auto t = base_preset(name, Variant::Deep, {2, 6, 6, 2}, 2, 64, 64, 1, 128);
    t.plan = t.eval_plan = {10, 10};
    t.epochs = 2000;
    t.optim.learning_rate = 5e-5;
    t.batch_size = 8;
    t.data.source = "sprites";
    t.data.train_sequences = 10000;
    t.data.val_sequences = 1000;
    t.data.seq_len = 20;
    t.data.convention = ErrorConvention::PerFrameSum;
    return t;
  }
  if (name == "kth20-b" || name == "kth40-b") {
    const bool long_horizon = name == "kth40-b";
    auto t = base_preset(name, Variant::Base, {6}, 2, 128, 128, 1, 128);
    t.plan = {10, 10};
    t.eval_plan = {10, long_horizon ? 40u : 20u};
    t.epochs = 100;
    t.optim.learning_rate = long_horizon ? 1e-4 : 5e-4;
    t.batch_size = long_horizon ? 1 : 2;
    t.data.source = "sprites";
    t.data.train_sequences = 1000;
    t.data.val_sequences = 100;
    t.data.seq_len = 10 + t.eval_plan.horizon;
    t.data.sprites = 1;
    t.data.convention = ErrorConvention::PerFrameSum;
    return t;
  }
  if (name == "taxibj-b") {
    // embed_dim tuned once for the 2.6M parameter / 0.9 GFLOP budget.
    auto t = base_preset(name, Variant::Base, {12}, 4, 32, 32, 2, 132);
    t.plan = t.eval_plan = {4, 4};
    t.epochs = 200;
    t.optim.learning_rate = 4e-4;
    t.batch_size = 16;
    t.data.source = "flows";
    t.data.train_sequences = 1000;
    t.data.val_sequences = 100;
    t.data.seq_len = 8;
    t.data.convention = ErrorConvention::PerPixelMean;
    return t;
  }
  if (name == "mnist-mini") {
    auto t = base_preset(name, Variant::Base, {4}, 4, 32, 32, 1, 64);
    t.plan = t.eval_plan = {10, 10};
    t.epochs = 3;
    t.optim.learning_rate = 2e-3;
    t.optim.grad_clip = 1.0;
    t.optim.warmup_steps = 20;
    t.batch_size = 8;
    t.data.source = "sprites";
    t.data.train_sequences = 1000;
    t.data.val_sequences = 100;
    t.data.seq_len = 20;
    t.data.convention = ErrorConvention::PerFrameSum;
    return t;
  }
  if (name == "taxibj-synth") {
    auto t = base_preset(name, Variant::Base, {4}, 4, 32, 32, 2, 64);
    t.plan = t.eval_plan = {4, 4};
    t.epochs = 5;
    t.optim.learning_rate = 1e-3;
    t.optim.grad_clip = 1.0;
    t.batch_size = 16;
    t.data.source = "flows";
    t.data.train_sequences = 512;
    t.data.val_sequences = 64;
    t.data.seq_len = 8;
    t.data.convention = ErrorConvention::PerPixelMean;
    return t;
  }
  std::string known;
  for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
  throw ConfigError("unknown preset '" + name + "' (known: " + known + ")");
}

// ---------------------------------------------------------------------------
// JSON mapping

namespace {

json model_json(const ModelConfig& m) {
  return {{"variant", to_string(m.variant)},          {"patch_size", m.patch_size},
          {"height", m.height},                       {"width", m.width},
          {"in_channels", m.in_channels},             {"embed_dim", m.embed_dim},
          {"vsb_depths", m.vsb_depths},               {"conv_variant", to_string(m.conv_variant)},
          {"state_dim", m.state_dim}};
}

json plan_json(const RolloutPlan& p) { return {{"observe", p.observe}, {"horizon", p.horizon}}; }

json full_json(const TrainConfig& c) {
  return {{"name", c.name},
          {"model", model_json(c.model)},
          {"plan", plan_json(c.plan)},
          {"eval_plan", plan_json(c.eval_plan)},
          {"optim",
           {{"learning_rate", c.optim.learning_rate},
            {"beta1", c.optim.beta1},
            {"beta2", c.optim.beta2},
            {"eps", c.optim.eps},
            {"min_lr", c.optim.min_lr},
            {"grad_clip", c.optim.grad_clip},
            {"schedule", c.optim.schedule},
            {"warmup_steps", c.optim.warmup_steps}}},
          {"data",
           {{"source", c.data.source},
            {"train_path", c.data.train_path},
            {"val_path", c.data.val_path},
            {"train_sequences", c.data.train_sequences},
            {"val_sequences", c.data.val_sequences},
            {"seq_len", c.data.seq_len},
            {"sprites", c.data.sprites},
            {"glyph_size", c.data.glyph_size},
            {"speed_min", c.data.speed_min},
            {"speed_max", c.data.speed_max},
            {"seed", c.data.seed},
            {"convention", to_string(c.data.convention)}}},
          {"train",
           {{"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"seed", c.seed},
            {"checkpoint_every", c.checkpoint_every},
            {"max_steps", c.max_steps},
            {"time_budget_s", c.time_budget_s},
            {"eval_sequences", c.eval_sequences},
            {"out_dir", c.out_dir}}}};
}

template <typename V>
void take(const json& j, const char* key, V& out) {
  out = j.at(key).get<V>();
}

ModelConfig model_from(const json& j) {
  ModelConfig m;
  m.variant = parse_variant(j.at("variant").get<std::string>());
  take(j, "patch_size", m.patch_size);
  take(j, "height", m.height);
  take(j, "width", m.width);
  take(j, "in_channels", m.in_channels);
  take(j, "embed_dim", m.embed_dim);
  take(j, "vsb_depths", m.vsb_depths);
  m.conv_variant = parse_conv_variant(j.at("conv_variant").get<std::string>());
  take(j, "state_dim", m.state_dim);
  return m;
}

RolloutPlan plan_from(const json& j) {
  RolloutPlan p;
  take(j, "observe", p.observe);
  take(j, "horizon", p.horizon);
  return p;
}

TrainConfig decode(const json& j) {
  TrainConfig c;
  take(j, "name", c.name);
  c.model = model_from(j.at("model"));
  c.plan = plan_from(j.at("plan"));
  c.eval_plan = plan_from(j.at("eval_plan"));
  const json& o = j.at("optim");
  take(o, "learning_rate", c.optim.learning_rate);
  take(o, "beta1", c.optim.beta1);
  take(o, "beta2", c.optim.beta2);
  take(o, "eps", c.optim.eps);
  take(o, "min_lr", c.optim.min_lr);
  take(o, "grad_clip", c.optim.grad_clip);
  take(o, "schedule", c.optim.schedule);
  take(o, "warmup_steps", c.optim.warmup_steps);
  const json& d = j.at("data");
  take(d, "source", c.data.source);
  take(d, "train_path", c.data.train_path);
  take(d, "val_path", c.data.val_path);
  take(d, "train_sequences", c.data.train_sequences);
  take(d, "val_sequences", c.data.val_sequences);
  take(d, "seq_len", c.data.seq_len);
  take(d, "sprites", c.data.sprites);
  take(d, "glyph_size", c.data.glyph_size);
  take(d, "speed_min", c.data.speed_min);
  take(d, "speed_max", c.data.speed_max);
  take(d, "seed", c.data.seed);
  c.data.convention = parse_convention(d.at("convention").get<std::string>());
  const json& t = j.at("train");
  take(t, "epochs", c.epochs);
  take(t, "batch_size", c.batch_size);
  take(t, "seed", c.seed);
  take(t, "checkpoint_every", c.checkpoint_every);
  take(t, "max_steps", c.max_steps);
  take(t, "time_budget_s", c.time_budget_s);
  take(t, "eval_sequences", c.eval_sequences);
  take(t, "out_dir", c.out_dir);
  return c;
}

// Overlays `patch` onto `base`, rejecting keys that base does not have.
void overlay(json& base, const json& patch, const std::string& where) {
  if (!patch.is_object()) throw ConfigError("section '" + where + "' must be an object");
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string path = where.empty() ? it.key() : where + "." + it.key();
    if (!base.contains(it.key())) throw ConfigError("unknown configuration key '" + path + "'");
    json& slot = base[it.key()];
    if (slot.is_object()) overlay(slot, it.value(), path);
    else slot = it.value();
  }
}

TrainConfig decode_checked(const json& j) {
  try {
    return decode(j);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid configuration value: ") + e.what());
  }
}

json parse_text(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string(what) + " is not valid JSON: " + e.what());
  }
}

}  // namespace

std::string to_json(const ModelConfig& m) { return model_json(m).dump(); }

ModelConfig model_config_from_json(const std::string& text) {
  const json j = parse_text(text, "model configuration");
  json base = model_json(ModelConfig{});
  overlay(base, j, "model");
  try {
    ModelConfig m = model_from(base);
    m.validate();
    return m;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid model configuration: ") + e.what());
  }
}

std::string to_json(const TrainConfig& cfg, int indent) { return full_json(cfg).dump(indent); }

TrainConfig config_from_json(const std::string& text) {
  json doc = parse_text(text, "configuration");
  if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
  TrainConfig start;
  if (doc.contains("preset")) {
    if (!doc["preset"].is_string()) throw ConfigError("'preset' must be a string");
    start = preset(doc["preset"].get<std::string>());
    doc.erase("preset");
  }
  json base = full_json(start);
  overlay(base, doc, "");
  TrainConfig cfg = decode_checked(base);
  cfg.validate();
  return cfg;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read configuration file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

void apply_override(TrainConfig& cfg, const std::string& key, const std::string& value) {
  json base = full_json(cfg);
  json v;
  try {
    v = json::parse(value);
  } catch (const json::parse_error&) {
    v = value;
  }
  if (key == "model.vsb_depths" && v.is_string()) v = parse_size_list(value);
  // Build the nested patch for the dotted key.
  json patch = v;
  std::string rest = key;
  std::vector<std::string> parts;
  for (std::size_t pos; (pos = rest.find('.')) != std::string::npos; rest = rest.substr(pos + 1))
    parts.push_back(rest.substr(0, pos));
  parts.push_back(rest);
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = json{{*it, patch}};
  overlay(base, patch, "");
  cfg = decode_checked(base);
}

bool apply_env_seed(TrainConfig& cfg) {
  const char* s = std::getenv("VMRNN_SEED");
  if (!s || !*s) return false;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s, &end, 10);
  if (*end != '\0') throw ConfigError(std::string("VMRNN_SEED is not an unsigned integer: ") + s);
  cfg.seed = v;
  return true;
}

std::vector<std::size_t> parse_size_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) throw ConfigError("empty entry in list '" + text + "'");
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != item.size() || item[0] == '-') throw ConfigError("not a non-negative integer: '" + item + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

}  // namespace vmrnn
