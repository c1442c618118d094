// Copyright 2026 The hdrdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>

#include "hdrdiff/config.hpp"
#include "hdrdiff/dataset.hpp"
#include "hdrdiff/metrics.hpp"
#include "hdrdiff/pipeline.hpp"
#include "hdrdiff/tensor_io.hpp"

namespace fs = std::filesystem;

namespace hdrdiff::cli {

namespace {

// Failures caused by user input (bad config contents) rather than by the run.
struct UsageFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SynthArgs {
  std::uint64_t seed = 0;
  int count = 1;
  int size = 64;
  int motion = 4;
  double sat_frac = 0.15;
  std::string out;
};

struct TrainArgs {
  std::string config, data, out, resume;
};

struct SampleArgs {
  std::string checkpoint, input, out;
  int steps = 25;
  int window = 512;
  int cell = 128;
  std::uint64_t seed = 0;
};

struct EvalArgs {
  std::string pred, gt;
  double mu = kDefaultMu;
  bool kv = false;
};

std::string loss_line(long iteration, const LossReport& r, double wall) {
  char buf[192];
  std::snprintf(buf, sizeof buf, "iter=%ld loss_noise=%.6g loss_image=%.6g loss_total=%.6g wall=%.3f", iteration,
                r.loss_noise, r.loss_image, r.loss_total, wall);
  return buf;
}

int run_synth(const SynthArgs& a, std::ostream& out) {
  fs::create_directories(a.out);
  for (int i = 0; i < a.count; ++i) {
    const std::uint64_t seed = a.seed + static_cast<std::uint64_t>(i);
    const SampleRecord r = synth_scene(seed, {a.size, a.motion, a.sat_frac, kDefaultGamma});
    char name[32];
    std::snprintf(name, sizeof name, "scene_%04d", i);
    save_dataset_sample(fs::path(a.out) / name, r);
  }
  out << "wrote " << a.count << " scenes to " << a.out << "\n";
  return kExitOk;
}

int run_train(const TrainArgs& a, std::ostream& out) {
  RunConfig config;
  try {
    config = load_config(a.config);
  } catch (const ConfigError& e) {
    throw UsageFailure(a.config + ": " + e.what());
  }
  std::vector<SampleRecord> records;
  for (const fs::path& dir : list_scenes(a.data)) records.push_back(load_dataset_sample(dir, config.gamma));
  if (records.empty()) throw LoadError(a.data + ": no scene directories");
  const TrainingSet<float> set = make_training_set(records, config.mu);

  fs::create_directories(a.out);
  const fs::path ckpt = fs::path(a.out) / "checkpoint.hdrf";
  std::ofstream log(fs::path(a.out) / "train.log", a.resume.empty() ? std::ios::trunc : std::ios::app);
  const std::string config_text = to_text(config);
  std::ofstream(fs::path(a.out) / "config.txt") << config_text;

  const auto start = std::chrono::steady_clock::now();
  TrainHooks hooks;
  hooks.on_log = [&](long it, const LossReport& r) {
    const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - start;
    const std::string line = loss_line(it, r, wall.count());
    out << line << "\n" << std::flush;
    log << line << "\n" << std::flush;
  };
  hooks.on_checkpoint = [&](const TrainState<float>& s) { save_checkpoint(ckpt, s, config_text); };

  if (a.resume.empty()) {
    run_training(config, set, hooks);
  } else {
    Checkpoint<float> ck = load_checkpoint<float>(a.resume);
    run_training(config, set, hooks, &ck.state);
  }
  out << "checkpoint: " << ckpt.string() << "\n";
  return kExitOk;
}

int run_sample(const SampleArgs& a, std::ostream& out) {
  Checkpoint<float> ck = load_checkpoint<float>(a.checkpoint);
  RunConfig config;
  try {
    config = parse_config(ck.config_text);
  } catch (const ConfigError& e) {
    throw LoadError(a.checkpoint + ": embedded configuration is invalid: " + e.what());
  }
  config.sampler.steps = a.steps;
  config.sampler.window = a.window;
  config.sampler.cell = a.cell;
  config.sampler.seed = a.seed;
  try {
    config.sampler.validate(config.schedule.build());
  } catch (const InvalidArgument& e) {
    throw UsageFailure(e.what());
  }
  const SampleRecord record = load_dataset_sample(a.input, config.gamma);
  const HdrImage<float> hdr = sample_hdr(record, ck.state, config);
  const fs::path dst(a.out);
  if (dst.extension() == ".png") {
    write_png(dst, mu_law_compress(hdr.data, config.mu));
  } else {
    write_image_tensor(dst, hdr.data, "hdr");
  }
  out << "wrote " << dst.string() << "\n";
  return kExitOk;
}

int run_eval(const EvalArgs& a, std::ostream& out) {
  const Tensor<float> pred = read_image_tensor<float>(a.pred);
  const Tensor<float> gt = read_image_tensor<float>(a.gt);
  const MetricReport m = evaluate(pred, gt, a.mu);
  if (a.kv) {
    out << std::setprecision(10) << "psnr_l=" << m.psnr_l << "\npsnr_mu=" << m.psnr_mu << "\nssim_l=" << m.ssim_l
        << "\nssim_mu=" << m.ssim_mu << "\n";
  } else {
    out << std::fixed << std::setprecision(4) << "PSNR-L   " << std::setw(10) << m.psnr_l << " dB\n"
        << "PSNR-mu  " << std::setw(10) << m.psnr_mu << " dB\n"
        << "SSIM-L   " << std::setw(10) << m.ssim_l << "\n"
        << "SSIM-mu  " << std::setw(10) << m.ssim_mu << "\n";
  }
  return kExitOk;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Conditional diffusion HDR deghosting"};
  app.name("hdrdiff");
  app.require_subcommand(1);

  SynthArgs synth;
  CLI::App* s = app.add_subcommand("synth", "Generate synthetic multi-exposure scenes");
  s->add_option("--seed", synth.seed, "Seed of the first scene")->default_val(0);
  s->add_option("--count", synth.count, "Number of scenes")->check(CLI::PositiveNumber)->default_val(1);
  s->add_option("--size", synth.size, "Image side in pixels")->check(CLI::Range(8, 1 << 14))->default_val(64);
  s->add_option("--motion", synth.motion, "Maximum shift of non-reference frames")->check(CLI::NonNegativeNumber)
      ->default_val(4);
  s->add_option("--sat-frac", synth.sat_frac, "Minimum saturated fraction of the high exposure")
      ->check(CLI::Range(0.0, 0.99))
      ->default_val(0.15);
  s->add_option("--out", synth.out, "Output directory")->required();

  TrainArgs train;
  CLI::App* t = app.add_subcommand("train", "Train a model");
  t->add_option("--config", train.config, "Run configuration file")->required()->check(CLI::ExistingFile);
  t->add_option("--data", train.data, "Directory of scene directories")->required()->check(CLI::ExistingDirectory);
  t->add_option("--out", train.out, "Output directory")->required();
  t->add_option("--resume", train.resume, "Checkpoint to continue from")->check(CLI::ExistingFile);

  SampleArgs sample;
  CLI::App* p = app.add_subcommand("sample", "Reconstruct an HDR image from a scene directory");
  p->add_option("--checkpoint", sample.checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  p->add_option("--input", sample.input, "Scene directory")->required()->check(CLI::ExistingDirectory);
  p->add_option("--steps", sample.steps, "Sampling steps")->check(CLI::PositiveNumber)->default_val(25);
  p->add_option("--window", sample.window, "Window side in pixels")->check(CLI::PositiveNumber)->default_val(512);
  p->add_option("--cell", sample.cell, "Window stride in pixels")->check(CLI::PositiveNumber)->default_val(128);
  p->add_option("--seed", sample.seed, "Latent noise seed")->default_val(0);
  p->add_option("--out", sample.out, "Output file (.hdrf linear HDR, .png tonemapped preview)")->required();

  EvalArgs eval;
  CLI::App* e = app.add_subcommand("eval", "Compare a prediction with ground truth");
  e->add_option("--pred", eval.pred, "Predicted HDR (.hdrf)")->required()->check(CLI::ExistingFile);
  e->add_option("--gt", eval.gt, "Ground-truth HDR (.hdrf)")->required()->check(CLI::ExistingFile);
  e->add_option("--mu", eval.mu, "Tonemapping mu")->check(CLI::PositiveNumber)->default_val(kDefaultMu);
  e->add_flag("--kv", eval.kv, "Print key=value lines");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex, out, err);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex, out, err);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex, out, err);
    return kExitUsage;
  }

  try {
    if (s->parsed()) return run_synth(synth, out);
    if (t->parsed()) return run_train(train, out);
    if (p->parsed()) return run_sample(sample, out);
    return run_eval(eval, out);
  } catch (const UsageFailure& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace hdrdiff::cli
