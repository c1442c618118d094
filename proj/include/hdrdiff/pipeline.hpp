// Copyright 2026 The hdrdiff Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef HDRDIFF_PIPELINE_HPP
#define HDRDIFF_PIPELINE_HPP

#include <filesystem>
#include <functional>
#include <vector>

#include "hdrdiff/config.hpp"
#include "hdrdiff/dataset.hpp"
#include "hdrdiff/metrics.hpp"
#include "hdrdiff/trainer.hpp"

namespace hdrdiff {

struct TrainHooks {
  /// Called every config.log_every iterations and after the last one.
  std::function<void(long iteration, const LossReport&)> on_log;
  /// Called every config.checkpoint_every iterations and after the last one.
  std::function<void(const TrainState<float>&)> on_checkpoint;
};

/// Builds the training set from records that carry ground truth.
TrainingSet<float> make_training_set(const std::vector<SampleRecord>& records, double mu);

/// Runs config.train.total_iters steps from `state` (a fresh state when null).
TrainState<float> run_training(const RunConfig& config, const TrainingSet<float>& data, const TrainHooks& hooks = {},
                               TrainState<float>* resume = nullptr);

/// Linear HDR estimate from the EMA weights.
HdrImage<float> sample_hdr(const SampleRecord& record, const TrainState<float>& state, const RunConfig& config);

/// Gamma-corrected reference LDR mapped to linear HDR.
Tensor<float> reference_baseline(const LdrSample<float>& sample);

/// Component-wise mean of reports.
MetricReport mean_report(const std::vector<MetricReport>& reports);

}  // namespace hdrdiff

#endif  // HDRDIFF_PIPELINE_HPP
