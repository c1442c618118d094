// Copyright 2026 The hdrdiff Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef HDRDIFF_TRAINER_HPP
#define HDRDIFF_TRAINER_HPP

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "hdrdiff/model_config.hpp"
#include "hdrdiff/params.hpp"
#include "hdrdiff/schedule.hpp"
#include "hdrdiff/tonemap.hpp"

namespace hdrdiff {

enum class ImageLossNorm { L2, L1 };

struct TrainConfig {
  double learning_rate = 2e-5;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double ema_decay = 0.999;
  int batch = 8;
  int patch_size = 128;
  long total_iters = 2000000;
  double mu = kDefaultMu;
  std::uint64_t seed = 0;
  bool use_loss_noise = true;
  bool use_loss_image = true;
  ImageLossNorm image_loss_norm = ImageLossNorm::L2;
  /// Global gradient-norm clip; <= 0 disables clipping.
  double grad_clip = 1.0;

  void validate(const ModelConfig& model) const;
};

/// Batch-averaged losses of one step. loss_total is the optimized objective:
/// the sum of the enabled terms (both by default).
struct LossReport {
  double loss_noise = 0.0;
  double loss_image = 0.0;
  double loss_total = 0.0;
};

/// One training pair: tonemapped target x0 and the three 6-channel LDR tensors.
template <typename Scalar>
struct TrainingExample {
  Tensor<Scalar> x0;
  ConditionInput<Scalar> cond;
};

/// Mean squared error between eps and eps_hat.
template <typename Scalar>
double loss_noise(const Tensor<Scalar>& eps, const Tensor<Scalar>& eps_hat) {
  require_same_shape(eps, eps_hat, "loss_noise");
  return static_cast<double>((eps.data - eps_hat.data).template cast<double>().squaredNorm()) /
         static_cast<double>(eps.size());
}

/// Mean squared error between x0 and the unclipped x0 recovered from (x_t, eps_hat).
template <typename Scalar>
double loss_image(const Tensor<Scalar>& x0, const Tensor<Scalar>& x_t, const Tensor<Scalar>& eps_hat, int t,
                  const NoiseSchedule& schedule);

/// Analytic gradient of loss_image with respect to eps_hat.
template <typename Scalar>
Tensor<Scalar> loss_image_grad(const Tensor<Scalar>& x0, const Tensor<Scalar>& x_t, const Tensor<Scalar>& eps_hat,
                               int t, const NoiseSchedule& schedule);

/// Adam first and second moments keyed by parameter name.
template <typename Scalar>
struct AdamState {
  std::map<std::string, Matrix<Scalar>> m;
  std::map<std::string, Matrix<Scalar>> v;
  long step = 0;
};

/// Everything a training run mutates.
template <typename Scalar>
struct TrainState {
  ParamStore<Scalar> params;
  AdamState<Scalar> adam;
  std::mt19937_64 rng;
  long iteration = 0;
};

/// Which loss terms contribute gradients.
struct LossWeights {
  double noise = 1.0;
  double image = 1.0;
};

/// Forms x_t from (x0, t, eps), runs the condition generator and noise
/// predictor, and adds scale * d(objective)/d(params) into params' grad slots.
/// Returns the unscaled per-example losses; loss_total is the weighted sum.
template <typename Scalar>
LossReport accumulate_gradients(const TrainingExample<Scalar>& example, int t, const Tensor<Scalar>& eps,
                                ParamStore<Scalar>& params, const ModelConfig& model, const NoiseSchedule& schedule,
                                const LossWeights& weights, ImageLossNorm norm, double scale);

/// One optimization step: per element t ~ U{1..T} and eps ~ N(0, I), gradient
/// of the enabled losses, global-norm clipping, Adam update and EMA update.
/// Throws DivergenceError (parameters untouched) on a non-finite loss or gradient.
template <typename Scalar>
LossReport train_step(const std::vector<TrainingExample<Scalar>>& batch, TrainState<Scalar>& state,
                      const ModelConfig& model, const TrainConfig& config, const NoiseSchedule& schedule);

/// Applies one Adam update from the current grad slots.
template <typename Scalar>
void adam_update(ParamStore<Scalar>& params, AdamState<Scalar>& adam, const TrainConfig& config);

/// Scales all gradients so their global L2 norm is at most max_norm; returns the norm before scaling.
template <typename Scalar>
double clip_grad_norm(ParamStore<Scalar>& params, double max_norm);

/// Fresh state: initialized parameters, zero moments, rng seeded from config.seed.
template <typename Scalar>
TrainState<Scalar> make_train_state(const ModelConfig& model, const TrainConfig& config);

/// Full-resolution training scenes, pre-converted for random cropping.
template <typename Scalar>
class TrainingSet {
 public:
  void add(const Tensor<Scalar>& gt_hdr, const LdrSample<Scalar>& ldr, double mu);
  int size() const { return static_cast<int>(targets_.size()); }

  /// Uniformly chosen scenes, random patch x patch crops.
  std::vector<TrainingExample<Scalar>> sample_batch(std::mt19937_64& rng, int batch, int patch) const;

 private:
  std::vector<Tensor<Scalar>> targets_;
  std::vector<ConditionInput<Scalar>> conds_;
};

}  // namespace hdrdiff

#endif  // HDRDIFF_TRAINER_HPP
