// SPDX-License-Identifier: Apache-2.0
//
// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any fails. Pass criterion numbers as arguments to run a
// subset, e.g. `acceptance 1 5 9`.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <set>
#include <string>

#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "vmrnn/accounting.hpp"
#include "vmrnn/checkpoint.hpp"
#include "vmrnn/config.hpp"
#include "vmrnn/ops.hpp"
#include "vmrnn/train.hpp"

using namespace vmrnn;
using fixtures::uniform;
using Clock = std::chrono::steady_clock;

// Enough for mnist-mini to clear the bar with margin on one core.
constexpr std::size_t kMiniSteps = 120;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// ---------------------------------------------------------------- 1: scan

Outcome chunked_scan() {
  Outcome o;
  std::mt19937_64 rng(101);
  const std::size_t chunks[3] = {1, 7, 32};
  double worst = 0;
  const auto t0 = Clock::now();
  for (int k = 0; k < 50; ++k) {
    const std::size_t L = 1 + rng() % 512, B = 1 + rng() % 2, E = 4 + rng() % 13, N = std::size_t(4) << (rng() % 3);
    const std::size_t chunk = k % 4 == 3 ? L : chunks[k % 4];
    std::mt19937_64 init(rng());
    auto p = init_s6_params<float>(S6Shape{E, N, (E + 15) / 16}, init);
    fixtures::scramble(p, rng());
    const auto u = Var<float>::constant(uniform<float>(Shape{B, L, E}, -1, 1, rng()));
    const auto seq = selective_scan_sequential(u, p).value();
    const auto chk = selective_scan_chunked(u, p, chunk).value();
    const double d = max_abs_diff(seq, chk);
    worst = std::max(worst, d);
    o.require(d <= 1e-5, fmt("L=%zu chunk=%zu diff %.2e", L, chunk, d));
  }
  const double secs = seconds_since(t0);
  o.require(secs < 10, fmt("took %.1fs", secs));
  o.detail = fmt("50 cases, max diff %.2e, %.2fs", worst, secs) + (o.detail.empty() ? "" : ": " + o.detail);
  return o;
}

// --------------------------------------------------------- 2: expand/merge

Outcome merge_identity() {
  Outcome o;
  std::mt19937_64 rng(202);
  std::vector<std::pair<std::size_t, std::size_t>> grids{{1, 9}, {9, 1}, {3, 5}, {1, 1}, {1, 32}, {32, 1}};
  while (grids.size() < 100) grids.emplace_back(1 + rng() % 24, 1 + rng() % 24);
  const auto t0 = Clock::now();
  for (auto [H, W] : grids) {
    const std::size_t C = 1 + rng() % 8;
    const auto z = Var<float>::constant(uniform<float>(Shape{2, H, W, C}, -10, 10, rng()));
    std::array<Var<float>, 4> seqs;
    for (std::size_t v = 0; v < 4; ++v) seqs[v] = scan_expand(z, kScanDirections[v]);
    const auto m = scan_merge(seqs, GridShape{H, W}).value();
    bool exact = m.numel() == z.numel();
    for (std::size_t i = 0; exact && i < m.numel(); ++i) exact = m[i] / 4 == z.value()[i];
    o.require(exact, fmt("%zux%zu not exact", H, W));
  }
  const double secs = seconds_since(t0);
  o.require(secs < 5, fmt("took %.1fs", secs));
  o.detail = fmt("100 grids incl. 1x9, 9x1, 3x5, %.2fs", secs) + (o.detail.empty() ? "" : ": " + o.detail);
  return o;
}

// ------------------------------------------------------------ 3: gradients

template <typename P>
void add_params(std::vector<gradcheck::Input>& inputs, P& p) {
  p.visit("", [&](const std::string& n, Var<double>& v) { inputs.push_back({n, v}); });
}

Outcome gradients() {
  Outcome o;
  const auto t0 = Clock::now();
  std::string parts;
  auto report = [&](const char* name, const gradcheck::Result& r) {
    parts += fmt("%s %.1e (%zu entries) ", name, r.max_rel, r.checked);
    o.require(r.max_rel < 1e-4, std::string(name) + " worst " + r.worst);
  };
  {
    std::mt19937_64 rng(31);
    auto p = init_s6_params<double>(S6Shape{3, 4, 1}, rng);
    fixtures::scramble(p, 32);
    const auto u = fixtures::param<double>(Shape{2, 9, 3}, -1, 1, 33);
    const auto w = uniform<double>(Shape{2, 9, 3}, -1, 1, 34);
    std::vector<gradcheck::Input> in{{"u", u}};
    add_params(in, p);
    report("selective_scan", gradcheck::check(in, [&] { return weighted_sum(selective_scan_sequential(u, p), w); }));
  }
  {
    VssShape s;
    s.channels = 4;
    s.state_dim = 3;
    std::mt19937_64 rng(41);
    auto p = init_vss_params<double>(s, rng);
    fixtures::scramble(p, 42);
    const auto x = fixtures::param<double>(Shape{1, 6, 4}, -1, 1, 43);
    const auto w = uniform<double>(Shape{1, 6, 4}, -1, 1, 44);
    std::vector<gradcheck::Input> in{{"x", x}};
    add_params(in, p);
    report("vss_forward",
           gradcheck::check(in, [&] { return weighted_sum(vss_forward(x, GridShape{2, 3}, p), w); }, 1e-5, 8));
  }
  {
    CellShape s;
    s.vss.channels = 4;
    s.vss.state_dim = 3;
    s.depth = 2;
    std::mt19937_64 rng(51);
    auto p = init_cell_params<double>(s, rng);
    fixtures::scramble(p, 52);
    const auto x = fixtures::param<double>(Shape{1, 4, 4}, -1, 1, 53);
    const auto h0 = fixtures::param<double>(Shape{1, 4, 4}, -0.9, 0.9, 54);
    const auto c0 = fixtures::param<double>(Shape{1, 4, 4}, -1, 1, 55);
    const auto w = uniform<double>(Shape{1, 4, 4}, -1, 1, 56);
    std::vector<gradcheck::Input> in{{"x", x}, {"h0", h0}, {"c0", c0}};
    add_params(in, p);
    report("cell_step", gradcheck::check(in, [&] {
             auto [h, next] = cell_step<double>(x, GridShape{2, 2}, CellState<double>{h0, c0}, p);
             return add(weighted_sum(h, w), weighted_sum(next.c, w));
           }, 1e-5, 6));
  }
  const double secs = seconds_since(t0);
  o.require(secs < 60, fmt("took %.1fs", secs));
  o.detail = "max rel error: " + parts + fmt("%.1fs", secs) + (o.detail.empty() ? "" : ": " + o.detail);
  return o;
}

// ----------------------------------------------------- 4: cell vs oracle

Outcome cell_oracle() {
  Outcome o;
  double worst = 0;
  for (std::uint64_t seed : {21, 22, 23}) {
    CellShape s;
    s.vss.channels = 8;
    s.vss.state_dim = 4;
    s.depth = 2;
    std::mt19937_64 rng(seed);
    auto p = init_cell_params<double>(s, rng);
    fixtures::scramble(p, seed + 7);
    const std::size_t H = 4, W = 4, L = 16, C = 8;
    std::optional<CellState<double>> state;
    oracle::Vec h(L * C, 0.0), c(L * C, 0.0);
    for (std::uint64_t t = 0; t < 3; ++t) {
      const auto x = Var<double>::constant(uniform<double>(Shape{1, L, C}, -1, 1, seed * 10 + t));
      auto [ht, next] = cell_step(x, GridShape{H, W}, state, p);
      state = next;
      const auto ref = oracle::cell(oracle::values(x), h, c, 1, H, W, p);
      h = ref.h;
      c = ref.c;
      for (std::size_t i = 0; i < h.size(); ++i) {
        worst = std::max(worst, std::fabs(ht.value()[i] - h[i]));
        worst = std::max(worst, std::fabs(next.c.value()[i] - c[i]));
      }
    }
  }
  o.require(worst < 1e-6, "difference too large");
  o.detail = fmt("3 threads x 3 steps, max |diff| %.2e", worst) + (o.detail.empty() ? "" : ": " + o.detail);
  return o;
}

// ------------------------------------------------------------- 5: budget

Outcome taxibj_budget() {
  Outcome o;
  const auto cfg = preset("taxibj-b");
  VmrnnModel<float> m(cfg.model, cfg.seed);
  const double params = double(count_parameters(m));
  const double flops = double(estimate_flops(cfg.model, cfg.plan).rollout_flops());
  o.require(std::fabs(params / 2.6e6 - 1) <= 0.20, "parameter count outside 2.6M +-20%");
  o.require(std::fabs(flops / 0.9e9 - 1) <= 0.30, "FLOPs outside 0.9G +-30%");
  o.detail = fmt("params %.3fM (%+.1f%%), FLOPs %.3fG (%+.1f%%)", params / 1e6, 100 * (params / 2.6e6 - 1), flops / 1e9,
                 100 * (flops / 0.9e9 - 1)) + (o.detail.empty() ? "" : ": " + o.detail);
  return o;
}

// ------------------------------------------------------------ 6: learning

Outcome learning() {
  Outcome o;
  std::string summary;
  // Overfit sanity: a small model on four sequences.
  TrainConfig toy;
  toy.model.patch_size = 4;
  toy.model.height = toy.model.width = 16;
  toy.model.embed_dim = 128;
  toy.model.state_dim = 4;
  toy.model.vsb_depths = {1};
  toy.plan = toy.eval_plan = {4, 4};
  // Narrower models or larger steps can stall on the blank-frame plateau.
  toy.optim.learning_rate = 2e-3;
  toy.optim.warmup_steps = 10;
  toy.optim.grad_clip = 0;
  toy.data.train_sequences = 4;
  toy.data.val_sequences = 1;
  toy.data.seq_len = 8;
  toy.data.sprites = 1;
  toy.batch_size = 4;
  toy.epochs = 200;
  toy.seed = 3;
  toy.out_dir = "";
  {
    auto [tr, va] = make_datasets(toy);
    VmrnnModel<float> m(toy.model, toy.seed);
    const auto log = train(m, toy, tr, nullptr).log;
    const double first = log.step_losses.front(), last = log.step_losses.back();
    o.require(log.step_losses.size() == 200 && last < 0.1 * first,
              fmt("overfit: loss %.4f -> %.4f over %zu steps", first, last, log.step_losses.size()));
    summary += fmt("overfit %.4f -> %.4f (x%.3f); ", first, last, last / first);
  }

  // mnist-mini against copy-last on held-out sequences.
  TrainConfig cfg = preset("mnist-mini");
  cfg.out_dir = "";
  cfg.max_steps = kMiniSteps;
  cfg.time_budget_s = 25 * 60;
  const auto t0 = Clock::now();
  auto [tr, va] = make_datasets(cfg);
  VmrnnModel<float> m(cfg.model, cfg.seed);
  const auto log = train(m, cfg, tr, nullptr).log;
  const double secs = seconds_since(t0);
  const auto model = evaluate(m, va, cfg.eval_plan, ErrorConvention::PerFrameSum);
  const auto base = copy_last_baseline(va, cfg.eval_plan, ErrorConvention::PerFrameSum);
  const double gain = 1 - model.mse / base.mse;
  o.require(gain >= 0.25, "improvement below 25%");
  o.require(secs <= 30 * 60, "training exceeded 30 minutes");
  summary += fmt("mnist-mini %zu steps in %.0fs: MSE %.1f vs copy-last %.1f (%.1f%% better)",
                 log.step_losses.size(), secs, model.mse, base.mse, 100 * gain);
  o.detail = summary + (o.detail.empty() ? "" : ": " + o.detail);
  return o;
}

// ------------------------------------------------------------ 7: metrics

Outcome metrics_check() {
  Outcome o;
  const auto a = uniform<float>(Shape{3, 2, 20, 24, 1}, 0, 1, 71), b = uniform<float>(Shape{3, 2, 20, 24, 1}, 0, 1, 72);
  o.require(ssim(a, a) == 1.0, "ssim(x, x) != 1");
  const oracle::Vec av(a.vec().begin(), a.vec().end()), bv(b.vec().begin(), b.vec().end());
  double worst = 0;
  worst = std::max(worst, std::fabs(mse(a, b, ErrorConvention::PerPixelMean) - oracle::mse_pixels(av, bv)));
  worst = std::max(worst, std::fabs(mae(a, b, ErrorConvention::PerPixelMean) - oracle::mae_pixels(av, bv)));
  double s = 0;
  const std::size_t fs = 20 * 24;
  for (std::size_t f = 0; f < 6; ++f) s += oracle::ssim_frame(av.data() + f * fs, bv.data() + f * fs, 20, 24, 1) / 6;
  worst = std::max(worst, std::fabs(ssim(a, b) - s));
  o.require(worst < 1e-6, "metric differs from its scalar oracle");
  o.require(mse(a, b, ErrorConvention::PerFrameSum) == mse(a, b, ErrorConvention::PerPixelMean) * double(fs) &&
                mae(a, b, ErrorConvention::PerFrameSum) == mae(a, b, ErrorConvention::PerPixelMean) * double(fs),
            "per-frame sum is not pixel mean x pixel count");
  o.detail = fmt("ssim(x,x) = %.17g, max oracle diff %.2e", ssim(a, a), worst) + (o.detail.empty() ? "" : ": " + o.detail);
  return o;
}

// ------------------------------------------------------- 8: reproducible

Outcome reproducibility() {
  Outcome o;
  TrainConfig cfg;
  cfg.model.patch_size = 2;
  cfg.model.height = cfg.model.width = 16;
  cfg.model.embed_dim = 8;
  cfg.model.state_dim = 2;
  cfg.plan = cfg.eval_plan = {3, 3};
  cfg.data.train_sequences = 8;
  cfg.data.val_sequences = 2;
  cfg.data.seq_len = 6;
  cfg.epochs = 2;
  cfg.batch_size = 2;
  cfg.seed = 8;
  fixtures::TempDir dir("accept");
  cfg.out_dir = dir.path().string();
  auto [tr, va] = make_datasets(cfg);
  VmrnnModel<float> a(cfg.model, cfg.seed), b(cfg.model, cfg.seed);
  const auto ra = train(a, cfg, tr, &va);
  auto cb = cfg;
  cb.out_dir = "";
  const auto rb = train(b, cb, tr, &va);
  o.require(ra.log.step_losses == rb.log.step_losses, "loss curves differ");
  const auto loaded = load_checkpoint(ra.last_checkpoint);
  const auto e1 = evaluate(a, va, cfg.eval_plan, ErrorConvention::PerPixelMean);
  const auto e2 = evaluate(loaded.model, va, cfg.eval_plan, ErrorConvention::PerPixelMean);
  bool same = e1.per_frame.size() == e2.per_frame.size();
  for (std::size_t t = 0; same && t < e1.per_frame.size(); ++t)
    same = std::memcmp(&e1.per_frame[t], &e2.per_frame[t], sizeof(FrameMetrics)) == 0;
  o.require(same && e1.to_csv() == e2.to_csv(), "checkpoint reload changed the metrics");
  o.detail = fmt("%zu identical step losses, reloaded MSE %.9g", ra.log.step_losses.size(), e2.mse) +
             (o.detail.empty() ? "" : ": " + o.detail);
  return o;
}

// ----------------------------------------------------- 9: presets/ablation

Outcome presets_and_axes() {
  Outcome o;
  NoGradGuard no_grad;
  std::set<std::size_t> sizes;
  auto run = [&](const std::string& label, const ModelConfig& m, const RolloutPlan& plan) {
    try {
      VmrnnModel<float> model(m, 1);
      const auto frames = uniform<float>(Shape{1, plan.observe, m.height, m.width, m.in_channels}, 0, 1, 9);
      const auto out = predict(model, frames, plan);
      const Shape want{1, plan.horizon, m.height, m.width, m.in_channels};
      bool finite = first_non_finite(out) == out.numel();
      o.require(out.shape() == want && finite, label + " produced " + shape_str(out.shape()));
      sizes.insert(m.height);
    } catch (const std::exception& e) {
      o.require(false, label + ": " + e.what());
    }
  };
  for (const auto& name : preset_names()) {
    const auto cfg = preset(name);
    run(name, cfg.model, cfg.plan);
  }
  o.require(sizes.count(64) && sizes.count(128) && sizes.count(32), "presets do not cover 64, 128 and 32");

  const auto base = preset("mnist-mini").model;
  const RolloutPlan quick{2, 2};
  std::size_t axes = 0;
  for (auto conv : {ConvVariant::DepthWise, ConvVariant::Conv2d, ConvVariant::DwDwdPointwise}) {
    auto m = base;
    m.conv_variant = conv;
    run("conv_variant=" + to_string(conv), m, quick);
    ++axes;
  }
  for (std::size_t p : {2, 4, 8}) {
    auto m = base;
    m.patch_size = p;
    run(fmt("patch=%zu", p), m, quick);
    ++axes;
  }
  for (std::size_t d = 2; d <= 18; ++d) {
    auto m = base;
    m.vsb_depths = {d};
    run(fmt("vsb_depth=%zu", d), m, quick);
    ++axes;
  }
  o.detail = fmt("%zu presets at sizes 32/64/128, %zu ablation settings", preset_names().size(), axes) +
             (o.detail.empty() ? "" : ": " + o.detail);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* title;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all{
      {1, "chunked scan equals sequential scan", chunked_scan},
      {2, "merge of the four expansions over 4 is the identity", merge_identity},
      {3, "float64 gradient checks", gradients},
      {4, "cell step matches a scalar reference", cell_oracle},
      {5, "TaxiBJ configuration size and compute", taxibj_budget},
      {6, "training beats copy-last and overfits a toy set", learning},
      {7, "metrics against scalar references", metrics_check},
      {8, "reproducible training and checkpoints", reproducibility},
      {9, "presets and ablation axes run", presets_and_axes},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    Outcome r;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail = std::string("exception: ") + e.what();
    }
    failures += !r.pass;
    std::printf("[%s] criterion %d: %s (%s)\n", r.pass ? "PASS" : "FAIL", c.id, c.title, r.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
