// SPDX-License-Identifier: Apache-2.0
#include "vmrnn/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "vmrnn/checkpoint.hpp"
#include "vmrnn/ops.hpp"

namespace vmrnn {

namespace fs = std::filesystem;

double scheduled_lr(const OptimConfig& cfg, std::size_t step, std::size_t total) {
  const double base = cfg.learning_rate;
  if (cfg.warmup_steps > 0 && step < cfg.warmup_steps) return base * double(step + 1) / double(cfg.warmup_steps);
  if (cfg.schedule == "constant" || total <= 1) return base;
  const double floor = std::min(cfg.min_lr, base);
  const std::size_t span = total > cfg.warmup_steps ? total - cfg.warmup_steps : 1;
  const double progress = std::clamp(double(step - std::min(step, cfg.warmup_steps)) / double(span), 0.0, 1.0);
  return floor + 0.5 * (base - floor) * (1.0 + std::cos(std::numbers::pi * progress));
}

double global_grad_norm(const std::vector<Var<float>>& params) {
  double s = 0;
  for (const auto& p : params) {
    if (p.grad().empty()) continue;
    for (float g : p.grad().vec()) s += double(g) * double(g);
  }
  return std::sqrt(s);
}

double clip_grad_norm(const std::vector<Var<float>>& params, double max_norm) {
  const double norm = global_grad_norm(params);
  if (max_norm > 0 && norm > max_norm) {
    const float k = static_cast<float>(max_norm / (norm + 1e-12));
    for (auto p : params) {
      if (p.grad().empty()) continue;
      for (float& g : p.mutable_grad().vec()) g *= k;
    }
  }
  return norm;
}

Adam::Adam(std::vector<Var<float>> params, const OptimConfig& cfg) : params_(std::move(params)), cfg_(cfg) {
  for (const auto& p : params_) {
    m_.emplace_back(p.shape());
    v_.emplace_back(p.shape());
  }
}

void Adam::step(double lr) {
  ++t_;
  const double b1 = cfg_.beta1, b2 = cfg_.beta2;
  const double c1 = 1.0 - std::pow(b1, double(t_)), c2 = 1.0 - std::pow(b2, double(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Var<float>& p = params_[i];
    if (p.grad().empty()) continue;
    const float* g = p.grad().data();
    float* w = p.mutable_value().data();
    float* m = m_[i].data();
    float* v = v_[i].data();
    for (std::size_t k = 0; k < p.numel(); ++k) {
      m[k] = static_cast<float>(b1 * m[k] + (1 - b1) * g[k]);
      v[k] = static_cast<float>(b2 * v[k] + (1 - b2) * double(g[k]) * g[k]);
      const double update = (m[k] / c1) / (std::sqrt(v[k] / c2) + cfg_.eps);
      w[k] = static_cast<float>(w[k] - lr * update);
    }
  }
}

Tensor<float> take_frames(const Tensor<float>& frames, std::size_t count) {
  if (frames.rank() != 5) throw ConfigError("expected [B, T, H, W, C] frames");
  const std::size_t B = frames.dim(0), T = frames.dim(1);
  if (count > T) throw ConfigError("need " + std::to_string(count) + " frames per sequence, have " + std::to_string(T));
  if (count == T) return frames;
  const std::size_t fs = frames.numel() / (B * T);
  Shape s = frames.shape();
  s[1] = count;
  Tensor<float> out(s);
  for (std::size_t b = 0; b < B; ++b)
    std::memcpy(out.data() + b * count * fs, frames.data() + b * T * fs, count * fs * sizeof(float));
  return out;
}

Var<float> rollout_loss(const VmrnnModel<float>& model, const Tensor<float>& frames, const RolloutPlan& plan) {
  if (frames.dim(1) < plan.observe + plan.horizon)
    throw ConfigError("training clips need observe + horizon = " + std::to_string(plan.observe + plan.horizon) +
                      " frames, have " + std::to_string(frames.dim(1)));
  const auto outputs = model.rollout_outputs(frames, plan);
  std::vector<Var<float>> terms;
  terms.reserve(outputs.size());
  for (std::size_t i = 0; i < outputs.size(); ++i)
    terms.push_back(mse_loss(outputs[i], Var<float>::constant(frame_at(frames, i + 1))));
  return scale(add_n(terms), 1.0f / float(terms.size()));
}

Tensor<float> predict(const VmrnnModel<float>& model, const Tensor<float>& frames, const RolloutPlan& plan) {
  NoGradGuard no_grad;
  return stack_frames(model.rollout(frames, plan));
}

MetricReport evaluate(const VmrnnModel<float>& model, const SequenceDataset& ds, const RolloutPlan& plan,
                      ErrorConvention convention, std::size_t batch_size, std::size_t max_sequences) {
  plan.validate();
  if (ds.size() == 0) throw ConfigError("evaluation dataset is empty");
  const ModelConfig& mc = model.config();
  if (ds.height() != mc.height || ds.width() != mc.width || ds.channels() != mc.in_channels)
    throw ConfigError("dataset frames " + std::to_string(ds.height()) + "x" + std::to_string(ds.width()) + "x" +
                      std::to_string(ds.channels()) + " do not match the model resolution");
  if (ds.seq_len() < plan.observe + plan.horizon)
    throw ConfigError("evaluation clips are shorter than observe + horizon");
  const std::size_t n = max_sequences ? std::min(max_sequences, ds.size()) : ds.size();
  batch_size = std::max<std::size_t>(1, batch_size);
  MetricAccumulator acc(convention);
  for (std::size_t first = 0; first < n; first += batch_size) {
    std::vector<std::size_t> idx(std::min(batch_size, n - first));
    std::iota(idx.begin(), idx.end(), first);
    const Tensor<float> clip = ds.batch(idx);
    const Tensor<float> pred = predict(model, take_frames(clip, plan.observe), plan);
    // Targets are frames observe .. observe + horizon - 1.
    Tensor<float> target(pred.shape());
    const std::size_t fs = target.numel() / (idx.size() * plan.horizon), T = clip.dim(1);
    for (std::size_t b = 0; b < idx.size(); ++b)
      std::memcpy(target.data() + b * plan.horizon * fs, clip.data() + (b * T + plan.observe) * fs,
                  plan.horizon * fs * sizeof(float));
    acc.add(pred, target);
  }
  return acc.report();
}

MetricReport copy_last_baseline(const SequenceDataset& ds, const RolloutPlan& plan, ErrorConvention convention,
                                std::size_t max_sequences) {
  plan.validate();
  if (ds.seq_len() < plan.observe + plan.horizon) throw ConfigError("clips are shorter than observe + horizon");
  const std::size_t n = max_sequences ? std::min(max_sequences, ds.size()) : ds.size();
  const std::size_t T = ds.seq_len(), fs = ds.height() * ds.width() * ds.channels();
  MetricAccumulator acc(convention);
  for (std::size_t s = 0; s < n; ++s) {
    Tensor<float> pred(Shape{1, plan.horizon, ds.height(), ds.width(), ds.channels()});
    Tensor<float> target(pred.shape());
    const float* seq = ds.frames.data() + s * T * fs;
    for (std::size_t h = 0; h < plan.horizon; ++h) {
      std::memcpy(pred.data() + h * fs, seq + (plan.observe - 1) * fs, fs * sizeof(float));
      std::memcpy(target.data() + h * fs, seq + (plan.observe + h) * fs, fs * sizeof(float));
    }
    acc.add(pred, target);
  }
  return acc.report();
}

std::pair<SequenceDataset, SequenceDataset> make_datasets(const TrainConfig& cfg) {
  const DataConfig& d = cfg.data;
  const ModelConfig& m = cfg.model;
  if (d.source == "file") {
    SequenceDataset train = load_dataset(d.train_path, Split::Train);
    SequenceDataset val;
    if (!d.val_path.empty()) {
      val = load_dataset(d.val_path, Split::Val);
    } else {
      if (train.size() < 2) throw ConfigError("need at least two sequences to carve out a validation split");
      const std::size_t nv = std::max<std::size_t>(1, train.size() / 10);
      val = train.slice(train.size() - nv, nv);
      train = train.slice(0, train.size() - nv);
    }
    val.split = Split::Val;
    return {std::move(train), std::move(val)};
  }
  auto make = [&](std::uint64_t seed, std::size_t count) {
    if (d.source == "flows") {
      FlowConfig f;
      f.seed = seed;
      f.sequences = count;
      f.seq_len = d.seq_len;
      f.height = m.height;
      f.width = m.width;
      f.channels = m.in_channels;
      return generate_flow_fields(f);
    }
    SpriteConfig s;
    s.seed = seed;
    s.sequences = count;
    s.seq_len = d.seq_len;
    s.height = m.height;
    s.width = m.width;
    s.channels = m.in_channels;
    s.sprites = d.sprites;
    s.glyph_size = d.glyph_size;
    s.speed_min = d.speed_min;
    s.speed_max = d.speed_max;
    return generate_moving_sprites(s);
  };
  SequenceDataset train = make(d.seed, d.train_sequences);
  SequenceDataset val = make(d.seed + 1, std::max<std::size_t>(1, d.val_sequences));
  val.split = Split::Val;
  return {std::move(train), std::move(val)};
}

// ---------------------------------------------------------------------------

std::string TrainLog::epochs_csv() const {
  std::string out = "epoch,steps,train_loss,lr,seconds,val_mse,val_mae,val_ssim,val_psnr,rng_digest\n";
  char buf[512];
  for (const auto& e : epochs) {
    if (e.val)
      std::snprintf(buf, sizeof buf, "%zu,%zu,%.9g,%.6g,%.3f,%.9g,%.9g,%.9g,%.9g,%s\n", e.epoch, e.steps, e.train_loss,
                    e.lr, e.seconds, e.val->mse, e.val->mae, e.val->ssim, e.val->psnr, e.rng_digest.c_str());
    else
      std::snprintf(buf, sizeof buf, "%zu,%zu,%.9g,%.6g,%.3f,,,,,%s\n", e.epoch, e.steps, e.train_loss, e.lr,
                    e.seconds, e.rng_digest.c_str());
    out += buf;
  }
  return out;
}

std::string TrainLog::steps_csv() const {
  std::string out = "step,loss\n";
  char buf[64];
  for (std::size_t i = 0; i < step_losses.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g\n", i + 1, step_losses[i]);
    out += buf;
  }
  return out;
}

namespace {

std::string rng_digest(const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : os.str()) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return hex_digest(h);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw FormatError("cannot write " + path.string());
  f << text;
}

}  // namespace

TrainOutcome train(VmrnnModel<float>& model, const TrainConfig& cfg, const SequenceDataset& train_ds,
                   const SequenceDataset* val_ds, const TrainHooks& hooks) {
  cfg.plan.validate();
  cfg.optim.validate();
  if (cfg.epochs < 1 || cfg.batch_size < 1) throw ConfigError("epochs and batch_size must be >= 1");
  if (!(model.config() == cfg.model)) throw ConfigError("model does not match the training configuration");
  if (train_ds.size() == 0) throw ConfigError("training set is empty");
  if (train_ds.height() != cfg.model.height || train_ds.width() != cfg.model.width ||
      train_ds.channels() != cfg.model.in_channels)
    throw ConfigError("training frames do not match the model resolution");
  const std::size_t clip_len = cfg.plan.observe + cfg.plan.horizon;
  if (train_ds.seq_len() < clip_len)
    throw ConfigError("training clips have " + std::to_string(train_ds.seq_len()) + " frames, plan needs " +
                      std::to_string(clip_len));

  const bool write = !cfg.out_dir.empty();
  const fs::path dir = cfg.out_dir;
  if (write) fs::create_directories(dir);
  auto say = [&](const std::string& s) {
    if (hooks.log) hooks.log(s);
  };

  std::vector<Var<float>> params;
  for (auto& [name, v] : model.named_parameters()) params.push_back(v);
  Adam opt(params, cfg.optim);

  const std::size_t n = train_ds.size();
  const std::size_t per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
  std::size_t total = per_epoch * cfg.epochs;
  if (cfg.max_steps) total = std::min(total, cfg.max_steps);

  std::mt19937_64 rng(cfg.seed ^ 0x5eed5eed5eedull);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  TrainOutcome out;
  TrainLog& log = out.log;
  double best = std::numeric_limits<double>::infinity();
  const auto t_start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count(); };
  std::size_t step = 0;
  bool stop = false;

  for (std::size_t epoch = 1; epoch <= cfg.epochs && !stop; ++epoch) {
    const auto t_epoch = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    EpochRecord rec;
    rec.epoch = epoch;
    double loss_sum = 0;
    for (std::size_t first = 0; first < n; first += cfg.batch_size) {
      if (cfg.max_steps && step >= cfg.max_steps) {
        log.stop_reason = "max_steps";
        stop = true;
        break;
      }
      if (cfg.time_budget_s > 0 && elapsed() >= cfg.time_budget_s) {
        log.stop_reason = "time_budget";
        stop = true;
        break;
      }
      std::vector<std::size_t> idx(order.begin() + first, order.begin() + std::min(n, first + cfg.batch_size));
      const Tensor<float> clip = take_frames(train_ds.batch(idx), clip_len);

      for (auto& p : params) p.zero_grad();
      double loss_value = 0;
      StepInfo info;
      try {
        Var<float> loss = rollout_loss(model, clip, cfg.plan);
        loss_value = loss.value()[0];
        if (!std::isfinite(loss_value)) throw NumericError("loss is not finite", step + 1);
        backward(loss);
        info.grad_norm = clip_grad_norm(params, cfg.optim.grad_clip);
        if (!std::isfinite(info.grad_norm)) throw NumericError("gradient norm is not finite", step + 1);
      } catch (const NumericError& e) {
        log.diverged = true;
        log.stop_reason = std::string("diverged: ") + e.what();
        say("training diverged at step " + std::to_string(step + 1) + ": " + e.what());
        stop = true;
        break;
      }
      info.clipped_norm = cfg.optim.grad_clip > 0 ? global_grad_norm(params) : info.grad_norm;
      info.lr = scheduled_lr(cfg.optim, step, total);
      opt.step(info.lr);
      ++step;
      info.step = step;
      info.loss = loss_value;
      log.step_losses.push_back(loss_value);
      loss_sum += loss_value;
      ++rec.steps;
      rec.lr = info.lr;
      if (hooks.on_step) hooks.on_step(info);
    }
    for (auto& p : params) p.zero_grad();
    if (rec.steps == 0) break;
    rec.train_loss = loss_sum / double(rec.steps);
    if (val_ds && val_ds->size() > 0 && !log.diverged)
      rec.val = evaluate(model, *val_ds, cfg.eval_plan, cfg.data.convention, cfg.batch_size, cfg.eval_sequences);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_epoch).count();
    rec.rng_digest = rng_digest(rng);
    log.epochs.push_back(rec);
    if (hooks.on_epoch) hooks.on_epoch(rec);

    if (write && !log.diverged) {
      CheckpointMeta meta{cfg.model, model.seed(), epoch, step, rec.val ? rec.val->mse : NAN, "last"};
      out.last_checkpoint = dir / "last.ckpt";
      save_checkpoint(out.last_checkpoint, model, meta);
      if (cfg.checkpoint_every && epoch % cfg.checkpoint_every == 0) {
        meta.tag = "epoch-" + std::to_string(epoch);
        save_checkpoint(dir / (meta.tag + ".ckpt"), model, meta);
      }
      const double score = rec.val ? rec.val->mse : rec.train_loss;
      if (score < best) {
        best = score;
        meta.tag = "best";
        out.best_checkpoint = dir / "best.ckpt";
        save_checkpoint(out.best_checkpoint, model, meta);
      }
      if (rec.val) write_text(dir / "val_metrics.csv", rec.val->to_csv());
    }
    if (write) {
      write_text(dir / "train_log.csv", log.epochs_csv());
      write_text(dir / "steps.csv", log.steps_csv());
    }
  }
  if (write) {
    write_text(dir / "train_log.csv", log.epochs_csv());
    write_text(dir / "steps.csv", log.steps_csv());
  }
  if (log.stop_reason.empty()) log.stop_reason = "completed";
  return out;
}

}  // namespace vmrnn
