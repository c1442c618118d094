// Copyright 2026 The hdrdiff Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef HDRDIFF_CONFIG_HPP
#define HDRDIFF_CONFIG_HPP

#include <filesystem>
#include <string>

#include "hdrdiff/model_config.hpp"
#include "hdrdiff/schedule.hpp"
#include "hdrdiff/swne.hpp"
#include "hdrdiff/trainer.hpp"

// Flat `key = value` run configuration. Blank lines and text after `#` are
// ignored. Missing keys keep their defaults; unknown keys are rejected.
//
//   model.base_channels  model.channel_multipliers (comma list)  model.res_blocks
//   model.time_embed_dim  model.attn_levels (comma list)  model.cond_features
//   model.conditioning (dfa | concat_aligned | concat_ldr)
//   train.learning_rate  train.adam_beta1  train.adam_beta2  train.adam_eps
//   train.ema_decay  train.batch  train.patch_size  train.iterations  train.seed
//   train.loss_noise  train.loss_image (true | false)  train.image_loss_norm (l2 | l1)
//   train.grad_clip  train.log_every  train.checkpoint_every
//   schedule.steps  schedule.beta_start  schedule.beta_end
//   tonemap.mu  tonemap.gamma
//   sampler.steps  sampler.window  sampler.cell  sampler.seed

namespace hdrdiff {

struct ScheduleConfig {
  int steps = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;

  NoiseSchedule build() const { return linear_beta_schedule(steps, beta_start, beta_end); }
};

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  ScheduleConfig schedule;
  double mu = kDefaultMu;
  double gamma = kDefaultGamma;
  SamplerConfig sampler;
  long log_every = 100;
  long checkpoint_every = 1000;

  /// Desk-scale training defaults.
  static RunConfig toy();
};

/// Throws ConfigError naming the first offending key (or line).
RunConfig parse_config(const std::string& text, RunConfig base = RunConfig::toy());
RunConfig load_config(const std::filesystem::path& path, RunConfig base = RunConfig::toy());

/// Canonical text form; parse_config(to_text(c)) reproduces c.
std::string to_text(const RunConfig& config);

}  // namespace hdrdiff

#endif  // HDRDIFF_CONFIG_HPP
