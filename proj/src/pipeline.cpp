// Copyright 2026 The hdrdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "hdrdiff/pipeline.hpp"

#include "hdrdiff/swne.hpp"

namespace hdrdiff {

TrainingSet<float> make_training_set(const std::vector<SampleRecord>& records, double mu) {
  TrainingSet<float> set;
  for (const SampleRecord& r : records) {
    if (!r.gt_hdr) throw InvalidArgument("training scene '" + r.scene_id + "' has no ground truth");
    set.add(*r.gt_hdr, r.ldr, mu);
  }
  return set;
}

TrainState<float> run_training(const RunConfig& config, const TrainingSet<float>& data, const TrainHooks& hooks,
                               TrainState<float>* resume) {
  const NoiseSchedule schedule = config.schedule.build();
  TrainState<float> state = resume ? std::move(*resume) : make_train_state<float>(config.model, config.train);
  while (state.iteration < config.train.total_iters) {
    const auto batch = data.sample_batch(state.rng, config.train.batch, config.train.patch_size);
    const LossReport r = train_step(batch, state, config.model, config.train, schedule);
    const bool last = state.iteration == config.train.total_iters;
    if (hooks.on_log && (state.iteration % config.log_every == 0 || last)) hooks.on_log(state.iteration, r);
    if (hooks.on_checkpoint && (state.iteration % config.checkpoint_every == 0 || last)) hooks.on_checkpoint(state);
  }
  return state;
}

HdrImage<float> sample_hdr(const SampleRecord& record, const TrainState<float>& state, const RunConfig& config) {
  return swne_sample(record.ldr, state.params.ema_weights(), config.model, config.schedule.build(), config.sampler);
}

Tensor<float> reference_baseline(const LdrSample<float>& sample) {
  Tensor<float> h = ldr_to_hdr_domain(sample.ldrs[LdrSample<float>::kReference],
                                      sample.exposures[LdrSample<float>::kReference], sample.gamma);
  h.data = h.data.cwiseMin(1.0f);
  return h;
}

MetricReport mean_report(const std::vector<MetricReport>& reports) {
  MetricReport m;
  if (reports.empty()) return m;
  for (const MetricReport& r : reports) {
    m.psnr_l += r.psnr_l;
    m.psnr_mu += r.psnr_mu;
    m.ssim_l += r.ssim_l;
    m.ssim_mu += r.ssim_mu;
  }
  const double n = static_cast<double>(reports.size());
  return {m.psnr_l / n, m.psnr_mu / n, m.ssim_l / n, m.ssim_mu / n};
}

}  // namespace hdrdiff
