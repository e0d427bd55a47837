// SPDX-License-Identifier: Apache-2.0
//
// Optimizer, training loop and evaluation runners.
#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vmrnn/config.hpp"
#include "vmrnn/data.hpp"
#include "vmrnn/metrics.hpp"
#include "vmrnn/model.hpp"

namespace vmrnn {

/// Learning rate after `step` completed updates out of `total`: optional
/// linear warmup, then cosine decay from learning_rate to min(min_lr,
/// learning_rate), or constant.
double scheduled_lr(const OptimConfig& cfg, std::size_t step, std::size_t total);

/// sqrt of the sum of squared gradient entries over all parameters.
double global_grad_norm(const std::vector<Var<float>>& params);

/// Scales every gradient so the global norm is at most max_norm. Returns the
/// norm before scaling. max_norm <= 0 leaves gradients untouched.
double clip_grad_norm(const std::vector<Var<float>>& params, double max_norm);

/// First/second moment method with bias correction.
class Adam {
 public:
  Adam(std::vector<Var<float>> params, const OptimConfig& cfg);
  void step(double lr);
  std::size_t steps() const { return t_; }

 private:
  std::vector<Var<float>> params_;
  std::vector<Tensor<float>> m_, v_;
  OptimConfig cfg_;
  std::size_t t_ = 0;
};

/// Mean per-pixel MSE over every rollout output against the next true frame.
/// frames must hold at least observe + horizon steps.
Var<float> rollout_loss(const VmrnnModel<float>& model, const Tensor<float>& frames, const RolloutPlan& plan);

/// The first `count` frames of every sequence in the batch.
Tensor<float> take_frames(const Tensor<float>& frames, std::size_t count);

struct StepInfo {
  std::size_t step = 0;
  double loss = 0;
  double grad_norm = 0;     // before clipping
  double clipped_norm = 0;  // after clipping
  double lr = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  std::size_t steps = 0;
  double train_loss = 0;  // mean batch loss over the epoch
  std::optional<MetricReport> val;
  double lr = 0;          // rate used by the last step
  double seconds = 0;
  std::string rng_digest;
};

struct TrainLog {
  std::vector<double> step_losses;
  std::vector<EpochRecord> epochs;
  bool diverged = false;
  std::string stop_reason;  // "completed", "max_steps", "time_budget", "diverged: ..."

  std::string epochs_csv() const;
  std::string steps_csv() const;
};

struct TrainOutcome {
  TrainLog log;
  std::filesystem::path last_checkpoint;  // empty when nothing was written
  std::filesystem::path best_checkpoint;
};

struct TrainHooks {
  std::function<void(const StepInfo&)> on_step;
  std::function<void(const EpochRecord&)> on_epoch;
  std::function<void(const std::string&)> log;
};

/// Trains `model` in place. Writes checkpoints and CSV logs to cfg.out_dir
/// unless it is empty. A non-finite loss or gradient stops training without
/// applying the step; checkpoints already on disk are kept.
TrainOutcome train(VmrnnModel<float>& model, const TrainConfig& cfg, const SequenceDataset& train_ds,
                   const SequenceDataset* val_ds, const TrainHooks& hooks = {});

/// Forecasts [B, horizon, H, W, C] for a batch of sequences.
Tensor<float> predict(const VmrnnModel<float>& model, const Tensor<float>& frames, const RolloutPlan& plan);

MetricReport evaluate(const VmrnnModel<float>& model, const SequenceDataset& ds, const RolloutPlan& plan,
                      ErrorConvention convention, std::size_t batch_size = 8, std::size_t max_sequences = 0);

/// Repeats the last observed frame for every forecast step.
MetricReport copy_last_baseline(const SequenceDataset& ds, const RolloutPlan& plan, ErrorConvention convention,
                                std::size_t max_sequences = 0);

/// Builds the train/val datasets a configuration asks for.
std::pair<SequenceDataset, SequenceDataset> make_datasets(const TrainConfig& cfg);

}  // namespace vmrnn
