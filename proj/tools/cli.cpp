// SPDX-License-Identifier: Apache-2.0
#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>

#include "vmrnn/accounting.hpp"
#include "vmrnn/checkpoint.hpp"
#include "vmrnn/config.hpp"
#include "vmrnn/data.hpp"
#include "vmrnn/train.hpp"

namespace vmrnn::cli {

namespace fs = std::filesystem;

void write_netpbm(const std::string& path, const float* frame, std::size_t h, std::size_t w, std::size_t c) {
  if (c < 1 || c > 3) throw ConfigError("netpbm output supports 1 to 3 channels, got " + std::to_string(c));
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FormatError("cannot write " + path);
  const std::size_t oc = c == 1 ? 1 : 3;
  f << (oc == 1 ? "P5\n" : "P6\n") << w << ' ' << h << "\n255\n";
  std::vector<unsigned char> row(w * oc);
  for (std::size_t y = 0; y < h; ++y) {
    std::fill(row.begin(), row.end(), 0);
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t k = 0; k < c; ++k) {
        const float v = std::clamp(frame[(y * w + x) * c + k], 0.0f, 1.0f);
        row[x * oc + k] = static_cast<unsigned char>(std::lround(v * 255.0f));
      }
    f.write(reinterpret_cast<const char*>(row.data()), std::streamsize(row.size()));
  }
  if (!f) throw FormatError("short write on " + path);
}

namespace {

// Options shared by every subcommand.
struct Common {
  std::string preset;
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool quiet = false;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--preset", c.preset, "Named configuration preset");
  app->add_option("--config", c.config, "JSON configuration file")->check(CLI::ExistingFile);
  app->add_option("--set", c.sets, "Override a config key, e.g. optim.learning_rate=1e-4");
  app->add_option("--seed", c.seed, "Model seed (beats VMRNN_SEED)");
  app->add_option("--out", c.out_dir, "Output directory");
  app->add_flag("-q,--quiet", c.quiet, "Less output");
}

TrainConfig resolve_config(const Common& c, const std::string& fallback_preset = "mnist-mini") {
  TrainConfig cfg;
  if (!c.config.empty()) {
    cfg = load_config(c.config);
    if (!c.preset.empty()) throw ConfigError("use either --preset or a config file with a \"preset\" key, not both");
  } else {
    cfg = preset(c.preset.empty() ? fallback_preset : c.preset);
  }
  for (const auto& kv : c.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + kv + "'");
    apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  apply_env_seed(cfg);
  if (c.seed) cfg.seed = *c.seed;
  if (!c.out_dir.empty()) cfg.out_dir = c.out_dir;
  cfg.validate();
  return cfg;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string human(double v) {
  if (v >= 1e9) return fmt("%.3fG", v / 1e9);
  if (v >= 1e6) return fmt("%.3fM", v / 1e6);
  if (v >= 1e3) return fmt("%.1fK", v / 1e3);
  return fmt("%.0f", v);
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::trunc);
  if (!f) throw FormatError("cannot write " + p.string());
  f << text;
}

// ------------------------------------------------------------------ generate

struct GenerateOpts {
  std::string import_path, layout_path;
  std::size_t train_sequences = 0, val_sequences = 0;
};

int cmd_generate(const Common& c, const GenerateOpts& g, std::ostream& out) {
  TrainConfig cfg = resolve_config(c);
  const fs::path dir = c.out_dir.empty() ? fs::path("data") : fs::path(c.out_dir);
  fs::create_directories(dir);
  if (!g.import_path.empty()) {
    if (g.layout_path.empty()) throw ConfigError("--import needs --layout");
    std::ifstream lf(g.layout_path);
    if (!lf) throw ConfigError("cannot read layout " + g.layout_path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(lf);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("layout: ") + e.what());
    }
    LayoutSpec spec;
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& k = it.key();
      if (k == "frames") spec.frames = it->get<std::size_t>();
      else if (k == "height") spec.height = it->get<std::size_t>();
      else if (k == "width") spec.width = it->get<std::size_t>();
      else if (k == "channels") spec.channels = it->get<std::size_t>();
      else if (k == "dtype") spec.dtype = it->get<std::string>();
      else if (k == "channel_order") spec.channel_order = it->get<std::string>();
      else if (k == "header_bytes") spec.header_bytes = it->get<std::size_t>();
      else if (k == "lower") spec.lower = it->get<double>();
      else if (k == "upper") spec.upper = it->get<double>();
      else if (k == "window") spec.window = it->get<std::size_t>();
      else if (k == "stride") spec.stride = it->get<std::size_t>();
      else throw ConfigError("layout: unknown key '" + k + "'");
    }
    const SequenceDataset ds = load_external_grid(g.import_path, spec);
    const fs::path p = dir / "imported.vmrn";
    save_dataset(ds, p);
    out << "wrote " << p.string() << ": " << ds.size() << " clips of " << ds.seq_len() << " frames, "
        << ds.height() << "x" << ds.width() << "x" << ds.channels() << "\n";
    return kOk;
  }
  if (cfg.data.source == "file") throw ConfigError("data.source is 'file'; nothing to generate (use --import)");
  if (g.train_sequences) cfg.data.train_sequences = g.train_sequences;
  if (g.val_sequences) cfg.data.val_sequences = g.val_sequences;
  const auto [train, val] = make_datasets(cfg);
  for (const auto* ds : {&train, &val}) {
    const fs::path p = dir / (to_string(ds->split) + ".vmrn");
    save_dataset(*ds, p);
    out << "wrote " << p.string() << ": " << ds->size() << " sequences of " << ds->seq_len() << " frames, "
        << ds->height() << "x" << ds->width() << "x" << ds->channels() << ", digest "
        << hex_digest(dataset_digest(ds->frames)) << "\n";
  }
  return kOk;
}

// --------------------------------------------------------------------- train

struct TrainOpts {
  std::optional<std::size_t> epochs, batch_size, max_steps;
  std::optional<double> lr, time_budget;
  std::string init;
  std::size_t log_every = 10;
};

int cmd_train(const Common& c, const TrainOpts& t, std::ostream& out) {
  TrainConfig cfg = resolve_config(c);
  if (t.epochs) cfg.epochs = *t.epochs;
  if (t.batch_size) cfg.batch_size = *t.batch_size;
  if (t.max_steps) cfg.max_steps = *t.max_steps;
  if (t.lr) cfg.optim.learning_rate = *t.lr;
  if (t.time_budget) cfg.time_budget_s = *t.time_budget;
  cfg.validate();

  auto [train_ds, val_ds] = make_datasets(cfg);
  VmrnnModel<float> model(cfg.model, cfg.seed);
  if (!t.init.empty()) {
    LoadedCheckpoint ck = load_checkpoint(t.init);
    if (!(ck.model.config() == cfg.model)) throw ConfigError("--init checkpoint was trained with a different model");
    model = std::move(ck.model);
  }
  fs::create_directories(cfg.out_dir);
  write_file(fs::path(cfg.out_dir) / "config.json", to_json(cfg) + "\n");

  out << cfg.name << ": " << to_string(cfg.model.variant) << " model, " << human(double(count_parameters(model)))
      << " params, " << train_ds.size() << " train / " << val_ds.size() << " val sequences, seed " << cfg.seed
      << "\n";
  TrainHooks hooks;
  if (!c.quiet) {
    hooks.on_step = [&](const StepInfo& s) {
      if (t.log_every && s.step % t.log_every == 0)
        out << "  step " << s.step << " loss " << fmt("%.6f", s.loss) << " grad " << fmt("%.3f", s.grad_norm)
            << " lr " << fmt("%.3g", s.lr) << std::endl;
    };
  }
  hooks.on_epoch = [&](const EpochRecord& e) {
    out << "epoch " << e.epoch << " loss " << fmt("%.6f", e.train_loss);
    if (e.val) out << " val_mse " << fmt("%.6f", e.val->mse) << " val_ssim " << fmt("%.4f", e.val->ssim);
    out << " (" << fmt("%.1f", e.seconds) << "s)" << std::endl;
  };
  hooks.log = [&](const std::string& s) { out << s << "\n"; };
  const TrainOutcome r = train(model, cfg, train_ds, &val_ds, hooks);
  out << "stopped: " << r.log.stop_reason << "\n";
  if (!r.last_checkpoint.empty()) out << "checkpoint " << r.last_checkpoint.string() << "\n";
  out << "log " << (fs::path(cfg.out_dir) / "train_log.csv").string() << "\n";
  if (r.log.diverged) return kRuntimeError;
  return kOk;
}

// ---------------------------------------------------------------- eval/predict

struct EvalOpts {
  std::string checkpoint, data, csv;
  std::optional<std::size_t> horizon, observe;
  std::size_t max_sequences = 0;
  bool baseline = false;
  std::size_t index = 0;
};

VmrnnModel<float> model_for(const TrainConfig& cfg, const std::string& checkpoint, std::ostream& err) {
  if (checkpoint.empty()) {
    err << "warning: no --checkpoint given, using an untrained model\n";
    return VmrnnModel<float>(cfg.model, cfg.seed);
  }
  return load_checkpoint(checkpoint).model;
}

SequenceDataset eval_data(const TrainConfig& cfg, const std::string& path) {
  if (!path.empty()) return load_dataset(path, Split::Test);
  return make_datasets(cfg).second;
}

RolloutPlan eval_plan(const TrainConfig& cfg, const EvalOpts& e) {
  RolloutPlan plan = cfg.eval_plan;
  if (e.observe) plan.observe = *e.observe;
  if (e.horizon) plan.horizon = *e.horizon;
  plan.validate();
  return plan;
}

int cmd_eval(const Common& c, const EvalOpts& e, std::ostream& out, std::ostream& err) {
  TrainConfig cfg = resolve_config(c);
  VmrnnModel<float> model = model_for(cfg, e.checkpoint, err);
  const SequenceDataset ds = eval_data(cfg, e.data);
  const RolloutPlan plan = eval_plan(cfg, e);
  const MetricReport rep = evaluate(model, ds, plan, cfg.data.convention, cfg.batch_size, e.max_sequences);
  out << rep.summary();
  if (e.baseline) {
    const MetricReport base = copy_last_baseline(ds, plan, cfg.data.convention, e.max_sequences);
    out << "copy-last baseline mse " << fmt("%.6f", base.mse) << " mae " << fmt("%.6f", base.mae) << " ssim "
        << fmt("%.4f", base.ssim) << "\n";
  }
  fs::path csv = e.csv;
  if (csv.empty()) {
    const fs::path dir = c.out_dir.empty() ? fs::path(".") : fs::path(c.out_dir);
    fs::create_directories(dir);
    csv = dir / "eval_metrics.csv";
  }
  write_file(csv, rep.to_csv());
  out << "csv " << csv.string() << "\n";
  return kOk;
}

int cmd_predict(const Common& c, const EvalOpts& e, std::ostream& out, std::ostream& err) {
  TrainConfig cfg = resolve_config(c);
  VmrnnModel<float> model = model_for(cfg, e.checkpoint, err);
  const SequenceDataset ds = eval_data(cfg, e.data);
  const RolloutPlan plan = eval_plan(cfg, e);
  if (e.index >= ds.size()) throw ConfigError("--index " + std::to_string(e.index) + " out of range");
  if (ds.seq_len() < plan.observe) throw ConfigError("sequence shorter than the observed window");
  const Tensor<float> seq = ds.batch({e.index});
  const Tensor<float> pred = predict(model, take_frames(seq, plan.observe), plan);

  const fs::path dir = c.out_dir.empty() ? fs::path("predictions") : fs::path(c.out_dir);
  fs::create_directories(dir);
  const std::size_t H = ds.height(), W = ds.width(), C = ds.channels(), fsz = H * W * C;
  const char* ext = C == 1 ? ".pgm" : ".ppm";
  auto name = [&](const char* kind, std::size_t t) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%03zu%s", kind, t, ext);
    return (dir / buf).string();
  };
  for (std::size_t t = 0; t < plan.observe; ++t) write_netpbm(name("input", t), seq.data() + t * fsz, H, W, C);
  for (std::size_t h = 0; h < plan.horizon; ++h) {
    write_netpbm(name("pred", plan.observe + h), pred.data() + h * fsz, H, W, C);
    if (plan.observe + h < ds.seq_len())
      write_netpbm(name("truth", plan.observe + h), seq.data() + (plan.observe + h) * fsz, H, W, C);
  }
  const fs::path csv = dir / "predict_metrics.csv";
  if (ds.seq_len() >= plan.observe + plan.horizon) {
    Tensor<float> target(pred.shape());
    std::memcpy(target.data(), seq.data() + plan.observe * fsz, plan.horizon * fsz * sizeof(float));
    MetricAccumulator acc(cfg.data.convention);
    acc.add(pred, target);
    write_file(csv, acc.report().to_csv());
  } else {
    std::string text = "step\n";
    for (std::size_t h = 0; h < plan.horizon; ++h) text += std::to_string(h + 1) + "\n";
    write_file(csv, text);
  }
  out << "wrote " << plan.horizon << " predicted frames to " << dir.string() << " and " << csv.string() << "\n";
  return kOk;
}

// --------------------------------------------------------------------- bench

struct BenchOpts {
  bool all = false;
  bool time = false;
};

struct BenchRow {
  std::string name;
  std::size_t params;
  FlopReport flops;
  double forward_ms = NAN;
};

BenchRow bench_row(const std::string& name, const TrainConfig& cfg, bool timed) {
  VmrnnModel<float> model(cfg.model, cfg.seed);
  BenchRow r{name, count_parameters(model), estimate_flops(cfg.model, cfg.plan)};
  if (timed) {
    const ModelConfig& m = cfg.model;
    Tensor<float> frames(Shape{1, cfg.plan.observe, m.height, m.width, m.in_channels});
    std::fill(frames.vec().begin(), frames.vec().end(), 0.5f);
    const auto t0 = std::chrono::steady_clock::now();
    predict(model, frames, cfg.plan);
    r.forward_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  }
  return r;
}

void print_bench(const std::vector<BenchRow>& rows, bool timed, std::ostream& out) {
  out << std::left << std::setw(22) << "config" << std::right << std::setw(12) << "params" << std::setw(16)
      << "MACs/step" << std::setw(8) << "steps" << std::setw(16) << "FLOPs(rollout)";
  if (timed) out << std::setw(14) << "rollout_ms";
  out << "\n";
  for (const auto& r : rows) {
    out << std::left << std::setw(22) << r.name << std::right << std::setw(12) << r.params << std::setw(16)
        << r.flops.macs_per_step << std::setw(8) << r.flops.steps << std::setw(16) << human(double(r.flops.rollout_flops()));
    if (timed) out << std::setw(14) << fmt("%.1f", r.forward_ms);
    out << "\n";
  }
}

int cmd_bench(const Common& c, const BenchOpts& b, std::ostream& out) {
  std::vector<BenchRow> rows;
  if (b.all) {
    if (!c.config.empty() || !c.preset.empty()) throw ConfigError("--all cannot be combined with --preset/--config");
    for (const auto& n : preset_names()) {
      Common cc = c;
      cc.preset = n;
      rows.push_back(bench_row(n, resolve_config(cc), b.time));
    }
  } else {
    const TrainConfig cfg = resolve_config(c);
    rows.push_back(bench_row(cfg.name, cfg, b.time));
  }
  print_bench(rows, b.time, out);
  return kOk;
}

// -------------------------------------------------------------------- ablate

struct AblateOpts {
  std::string axis;
  std::string values;
  std::size_t train_steps = 0;
};

int cmd_ablate(const Common& c, const AblateOpts& a, std::ostream& out) {
  const TrainConfig base = resolve_config(c);
  std::vector<std::string> values;
  {
    std::stringstream ss(a.values);
    for (std::string v; std::getline(ss, v, ',');)
      if (!v.empty()) values.push_back(v);
  }
  if (values.empty()) throw ConfigError("--values is empty");

  std::vector<TrainConfig> variants;
  for (const auto& v : values) {
    TrainConfig cfg = base;
    if (a.axis == "conv_variant") {
      cfg.model.conv_variant = parse_conv_variant(v);
    } else if (a.axis == "patch" || a.axis == "patch_size") {
      cfg.model.patch_size = parse_size_list(v).at(0);
    } else if (a.axis == "vsb_depth") {
      const std::size_t d = parse_size_list(v).at(0);
      if (cfg.model.variant == Variant::Base) {
        cfg.model.vsb_depths = {d};
      } else {
        // Deep models: the sweep sets the depth of the innermost cells.
        cfg.model.vsb_depths[1] = cfg.model.vsb_depths[2] = d;
      }
    } else {
      throw ConfigError("unknown ablation axis '" + a.axis + "' (conv_variant, patch, vsb_depth)");
    }
    cfg.name = base.name + ":" + a.axis + "=" + v;
    cfg.validate();
    variants.push_back(std::move(cfg));
  }

  const fs::path dir = c.out_dir.empty() ? fs::path("ablate") : fs::path(c.out_dir);
  fs::create_directories(dir);
  std::string csv = a.axis + ",params,macs_per_step,rollout_flops,rollout_ms,val_mse,val_ssim\n";
  out << std::left << std::setw(14) << a.axis << std::right << std::setw(12) << "params" << std::setw(14)
      << "FLOPs" << std::setw(13) << "rollout_ms" << std::setw(12) << "val_mse" << std::setw(10) << "val_ssim"
      << "\n";
  for (std::size_t i = 0; i < variants.size(); ++i) {
    TrainConfig cfg = variants[i];
    BenchRow r = bench_row(cfg.name, cfg, true);
    double vmse = NAN, vssim = NAN;
    if (a.train_steps > 0) {
      cfg.max_steps = a.train_steps;
      cfg.epochs = std::max<std::size_t>(cfg.epochs, 1);
      cfg.out_dir = "";
      auto [tr, va] = make_datasets(cfg);
      VmrnnModel<float> model(cfg.model, cfg.seed);
      const TrainOutcome o = train(model, cfg, tr, nullptr, {});
      if (!o.log.diverged) {
        const MetricReport rep = evaluate(model, va, cfg.eval_plan, cfg.data.convention, cfg.batch_size,
                                          cfg.eval_sequences ? cfg.eval_sequences : 32);
        vmse = rep.mse;
        vssim = rep.ssim;
      }
    }
    out << std::left << std::setw(14) << values[i] << std::right << std::setw(12) << r.params << std::setw(14)
        << human(double(r.flops.rollout_flops())) << std::setw(13) << fmt("%.1f", r.forward_ms) << std::setw(12)
        << (std::isnan(vmse) ? std::string("-") : fmt("%.5f", vmse)) << std::setw(10)
        << (std::isnan(vssim) ? std::string("-") : fmt("%.4f", vssim)) << std::endl;
    csv += values[i] + "," + std::to_string(r.params) + "," + std::to_string(r.flops.macs_per_step) + "," +
           std::to_string(r.flops.rollout_flops()) + "," + fmt("%.3f", r.forward_ms) + "," +
           (std::isnan(vmse) ? "" : fmt("%.9g", vmse)) + "," + (std::isnan(vssim) ? "" : fmt("%.9g", vssim)) + "\n";
  }
  const fs::path p = dir / ("ablate_" + a.axis + ".csv");
  write_file(p, csv);
  out << "csv " << p.string() << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"VMRNN spatiotemporal forecasting toolkit", "vmrnn"};
  app.require_subcommand(1);
  app.footer("Presets: " + [] {
    std::string s;
    for (const auto& n : preset_names()) s += (s.empty() ? "" : ", ") + n;
    return s;
  }());

  Common common;
  GenerateOpts gen;
  TrainOpts tr;
  EvalOpts ev;
  BenchOpts bo;
  AblateOpts ab;

  auto* generate = app.add_subcommand("generate", "Write synthetic or imported datasets");
  add_common(generate, common);
  generate->add_option("--import", gen.import_path, "Raw frame series to convert")->check(CLI::ExistingFile);
  generate->add_option("--layout", gen.layout_path, "JSON layout of the raw series");
  generate->add_option("--train-sequences", gen.train_sequences);
  generate->add_option("--val-sequences", gen.val_sequences);

  auto* train_cmd = app.add_subcommand("train", "Train a model");
  add_common(train_cmd, common);
  train_cmd->add_option("--epochs", tr.epochs);
  train_cmd->add_option("--batch-size", tr.batch_size);
  train_cmd->add_option("--max-steps", tr.max_steps);
  train_cmd->add_option("--lr", tr.lr);
  train_cmd->add_option("--time-budget", tr.time_budget, "Seconds");
  train_cmd->add_option("--init", tr.init, "Start from this checkpoint")->check(CLI::ExistingFile);
  train_cmd->add_option("--log-every", tr.log_every, "Steps between progress lines (0 = off)");

  auto add_eval_opts = [&](CLI::App* sub) {
    add_common(sub, common);
    sub->add_option("--checkpoint", ev.checkpoint)->check(CLI::ExistingFile);
    sub->add_option("--data", ev.data, "Dataset file (default: the config's validation set)")
        ->check(CLI::ExistingFile);
    sub->add_option("--observe", ev.observe);
    sub->add_option("--horizon", ev.horizon);
  };
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  add_eval_opts(eval_cmd);
  eval_cmd->add_option("--csv", ev.csv, "Per-frame metrics CSV path");
  eval_cmd->add_option("--max-sequences", ev.max_sequences);
  eval_cmd->add_flag("--baseline", ev.baseline, "Also report the copy-last baseline");

  auto* predict_cmd = app.add_subcommand("predict", "Write predicted frames as PGM/PPM images");
  add_eval_opts(predict_cmd);
  predict_cmd->add_option("--index", ev.index, "Sequence index in the dataset");

  auto* bench_cmd = app.add_subcommand("bench", "Parameter and FLOP table");
  add_common(bench_cmd, common);
  bench_cmd->add_flag("--all", bo.all, "Every preset");
  bench_cmd->add_flag("--time", bo.time, "Also time one rollout");

  auto* ablate_cmd = app.add_subcommand("ablate", "Sweep one architecture axis");
  add_common(ablate_cmd, common);
  ablate_cmd->add_option("--axis", ab.axis, "conv_variant | patch | vsb_depth")->required();
  ablate_cmd->add_option("--values", ab.values, "Comma-separated values")->required();
  ablate_cmd->add_option("--train-steps", ab.train_steps, "Short training run per value (0 = cost only)");

  std::vector<std::string> args(argv.rbegin(), argv.rend());
  if (!args.empty()) args.pop_back();  // program name
  try {
    app.parse(args);
  } catch (const CLI::Success& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kConfigError;
  }

  try {
    if (*generate) return cmd_generate(common, gen, out);
    if (*train_cmd) return cmd_train(common, tr, out);
    if (*eval_cmd) return cmd_eval(common, ev, out, err);
    if (*predict_cmd) return cmd_predict(common, ev, out, err);
    if (*bench_cmd) return cmd_bench(common, bo, out);
    if (*ablate_cmd) return cmd_ablate(common, ab, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kConfigError;
}

}  // namespace vmrnn::cli
