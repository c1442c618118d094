// Copyright 2026 The hdrdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "hdrdiff/trainer.hpp"

#include <cmath>
#include <string>

#include "hdrdiff/diffusion.hpp"
#include "hdrdiff/unet.hpp"

namespace hdrdiff {

void TrainConfig::validate(const ModelConfig& model) const {
  if (!(learning_rate >= 0.0)) throw InvalidArgument("TrainConfig: learning_rate must be >= 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) throw InvalidArgument("TrainConfig: adam_beta1 outside [0, 1)");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) throw InvalidArgument("TrainConfig: adam_beta2 outside [0, 1)");
  if (!(ema_decay >= 0.0 && ema_decay < 1.0)) throw InvalidArgument("TrainConfig: ema_decay outside [0, 1)");
  if (batch < 1) throw InvalidArgument("TrainConfig: batch must be >= 1");
  if (patch_size < 1 || patch_size % model.spatial_divisor() != 0)
    throw InvalidArgument("TrainConfig: patch_size must be a positive multiple of " +
                          std::to_string(model.spatial_divisor()));
  if (total_iters < 1) throw InvalidArgument("TrainConfig: total_iters must be >= 1");
  if (!(mu > 0.0)) throw InvalidArgument("TrainConfig: mu must be positive");
  if (!use_loss_noise && !use_loss_image) throw InvalidArgument("TrainConfig: at least one loss must be enabled");
}

template <typename Scalar>
double loss_image(const Tensor<Scalar>& x0, const Tensor<Scalar>& x_t, const Tensor<Scalar>& eps_hat, int t,
                  const NoiseSchedule& schedule) {
  require_same_shape(x0, x_t, "loss_image");
  const Tensor<Scalar> x0_hat = predict_x0(x_t, t, eps_hat, schedule, false);
  return static_cast<double>((x0.data - x0_hat.data).template cast<double>().squaredNorm()) /
         static_cast<double>(x0.size());
}

template <typename Scalar>
Tensor<Scalar> loss_image_grad(const Tensor<Scalar>& x0, const Tensor<Scalar>& x_t, const Tensor<Scalar>& eps_hat,
                               int t, const NoiseSchedule& schedule) {
  require_same_shape(x0, x_t, "loss_image_grad");
  const Tensor<Scalar> x0_hat = predict_x0(x_t, t, eps_hat, schedule, false);
  const double ab = schedule.alpha_bar(t);
  const double k = -std::sqrt(1.0 - ab) / std::sqrt(ab) * 2.0 / static_cast<double>(x0.size());
  Tensor<Scalar> g(x0.height, x0.width, x0.channels());
  g.data = Scalar(k) * (x0_hat.data - x0.data);
  return g;
}

template <typename Scalar>
LossReport accumulate_gradients(const TrainingExample<Scalar>& example, int t, const Tensor<Scalar>& eps,
                                ParamStore<Scalar>& params, const ModelConfig& model, const NoiseSchedule& schedule,
                                const LossWeights& weights, ImageLossNorm norm, double scale) {
  require_same_shape(example.x0, eps, "accumulate_gradients");
  const Tensor<Scalar> x_t = forward_diffuse(example.x0, t, eps, schedule);
  const double ab = schedule.alpha_bar(t);

  ad::Graph<Scalar> g;
  std::array<ad::Var, 3> y;
  for (int i = 0; i < 3; ++i) y[i] = g.constant(example.cond.frames[i]);
  const ad::Var cond = encode_condition(g, y, params, model);
  const ad::Var xt = g.constant(x_t);
  const ad::Var eps_hat = predict_noise(g, xt, t, cond, params, model);

  const ad::Var l_noise = ad::mean_square(g, ad::sub(g, eps_hat, g.constant(eps)));
  // x0_hat = x_t / sqrt(abar) - sqrt(1 - abar) / sqrt(abar) * eps_hat, x_t constant.
  Tensor<Scalar> offset(x_t.height, x_t.width, x_t.channels());
  offset.data = x_t.data / Scalar(std::sqrt(ab)) - example.x0.data;
  const ad::Var diff =
      ad::add(g, ad::scale(g, eps_hat, Scalar(-std::sqrt(1.0 - ab) / std::sqrt(ab))), g.constant(std::move(offset)));
  const ad::Var l_image = norm == ImageLossNorm::L2 ? ad::mean_square(g, diff) : ad::mean_abs(g, diff);

  LossReport r;
  r.loss_noise = static_cast<double>(g.value(l_noise)(0, 0));
  r.loss_image = static_cast<double>(g.value(l_image)(0, 0));
  r.loss_total = weights.noise * r.loss_noise + weights.image * r.loss_image;
  if (!std::isfinite(r.loss_total))
    throw DivergenceError("non-finite loss at t=" + std::to_string(t) + " (noise=" + std::to_string(r.loss_noise) +
                          ", image=" + std::to_string(r.loss_image) + ")");

  ad::Var objective;
  if (weights.noise != 0.0 && weights.image != 0.0) {
    objective = ad::add(g, ad::scale(g, l_noise, Scalar(weights.noise)), ad::scale(g, l_image, Scalar(weights.image)));
  } else if (weights.noise != 0.0) {
    objective = ad::scale(g, l_noise, Scalar(weights.noise));
  } else {
    objective = ad::scale(g, l_image, Scalar(weights.image));
  }
  g.backward(ad::scale(g, objective, Scalar(scale)));
  params.accumulate(g);
  return r;
}

template <typename Scalar>
double clip_grad_norm(ParamStore<Scalar>& params, double max_norm) {
  double sq = 0.0;
  for (const auto& [_, p] : params.entries()) sq += p.grad.template cast<double>().squaredNorm();
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const Scalar s(max_norm / norm);
    for (auto& [_, p] : params.entries()) p.grad *= s;
  }
  return norm;
}

template <typename Scalar>
void adam_update(ParamStore<Scalar>& params, AdamState<Scalar>& adam, const TrainConfig& config) {
  ++adam.step;
  const double b1 = config.adam_beta1, b2 = config.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(adam.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(adam.step));
  const Scalar lr(config.learning_rate / c1);
  const Scalar inv_c2(1.0 / c2);
  const Scalar eps(config.adam_eps);
  for (auto& [name, p] : params.entries()) {
    auto& m = adam.m[name];
    auto& v = adam.v[name];
    if (m.size() == 0) m = Matrix<Scalar>::Zero(p.value.rows(), p.value.cols());
    if (v.size() == 0) v = Matrix<Scalar>::Zero(p.value.rows(), p.value.cols());
    m = Scalar(b1) * m + Scalar(1.0 - b1) * p.grad;
    v = Scalar(b2) * v + Scalar(1.0 - b2) * p.grad.cwiseAbs2();
    p.value.array() -= lr * m.array() / ((v.array() * inv_c2).sqrt() + eps);
  }
}

template <typename Scalar>
LossReport train_step(const std::vector<TrainingExample<Scalar>>& batch, TrainState<Scalar>& state,
                      const ModelConfig& model, const TrainConfig& config, const NoiseSchedule& schedule) {
  if (batch.empty()) throw InvalidArgument("train_step: empty batch");
  const LossWeights weights{config.use_loss_noise ? 1.0 : 0.0, config.use_loss_image ? 1.0 : 0.0};
  std::uniform_int_distribution<int> pick_t(1, schedule.steps());
  std::normal_distribution<double> normal(0.0, 1.0);

  state.params.zero_grad();
  LossReport mean;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (const TrainingExample<Scalar>& ex : batch) {
    const int t = pick_t(state.rng);
    Tensor<Scalar> eps(ex.x0.height, ex.x0.width, ex.x0.channels());
    for (Eigen::Index i = 0; i < eps.data.size(); ++i) eps.data.data()[i] = Scalar(normal(state.rng));
    const LossReport r =
        accumulate_gradients(ex, t, eps, state.params, model, schedule, weights, config.image_loss_norm, inv_b);
    mean.loss_noise += r.loss_noise * inv_b;
    mean.loss_image += r.loss_image * inv_b;
    mean.loss_total += r.loss_total * inv_b;
  }
  const double gnorm = clip_grad_norm(state.params, config.grad_clip);
  if (!std::isfinite(gnorm))
    throw DivergenceError("non-finite gradient norm at iteration " + std::to_string(state.iteration));
  adam_update(state.params, state.adam, config);
  state.params.update_ema(config.ema_decay);
  ++state.iteration;
  return mean;
}

template <typename Scalar>
TrainState<Scalar> make_train_state(const ModelConfig& model, const TrainConfig& config) {
  config.validate(model);
  TrainState<Scalar> s{init_model<Scalar>(model, config.seed), {}, std::mt19937_64(config.seed ^ 0x9e3779b97f4a7c15ULL), 0};
  return s;
}

template <typename Scalar>
void TrainingSet<Scalar>::add(const Tensor<Scalar>& gt_hdr, const LdrSample<Scalar>& ldr, double mu) {
  validate(ldr);
  if (gt_hdr.height != ldr.ldrs[0].height || gt_hdr.width != ldr.ldrs[0].width)
    throw ShapeMismatch("TrainingSet::add: ground truth and LDR dims differ");
  targets_.push_back(mu_law_compress(gt_hdr, mu));
  conds_.push_back(assemble_condition_input(ldr));
}

template <typename Scalar>
std::vector<TrainingExample<Scalar>> TrainingSet<Scalar>::sample_batch(std::mt19937_64& rng, int batch,
                                                                       int patch) const {
  if (targets_.empty()) throw InvalidArgument("TrainingSet: no scenes");
  std::uniform_int_distribution<int> pick(0, size() - 1);
  std::vector<TrainingExample<Scalar>> out;
  out.reserve(batch);
  for (int b = 0; b < batch; ++b) {
    const int i = pick(rng);
    const Tensor<Scalar>& x = targets_[i];
    if (patch > x.height || patch > x.width) throw InvalidArgument("TrainingSet: patch larger than scene");
    const int row = std::uniform_int_distribution<int>(0, x.height - patch)(rng);
    const int col = std::uniform_int_distribution<int>(0, x.width - patch)(rng);
    TrainingExample<Scalar> ex;
    ex.x0 = x.crop(row, col, patch, patch);
    for (int f = 0; f < 3; ++f) ex.cond.frames[f] = conds_[i].frames[f].crop(row, col, patch, patch);
    out.push_back(std::move(ex));
  }
  return out;
}

#define HDRDIFF_INSTANTIATE(S)                                                                                     \
  template double loss_image<S>(const Tensor<S>&, const Tensor<S>&, const Tensor<S>&, int, const NoiseSchedule&); \
  template Tensor<S> loss_image_grad<S>(const Tensor<S>&, const Tensor<S>&, const Tensor<S>&, int,                \
                                        const NoiseSchedule&);                                                   \
  template LossReport accumulate_gradients<S>(const TrainingExample<S>&, int, const Tensor<S>&, ParamStore<S>&,   \
                                              const ModelConfig&, const NoiseSchedule&, const LossWeights&,     \
                                              ImageLossNorm, double);                                            \
  template LossReport train_step<S>(const std::vector<TrainingExample<S>>&, TrainState<S>&, const ModelConfig&,  \
                                    const TrainConfig&, const NoiseSchedule&);                                   \
  template void adam_update<S>(ParamStore<S>&, AdamState<S>&, const TrainConfig&);                               \
  template double clip_grad_norm<S>(ParamStore<S>&, double);                                                     \
  template TrainState<S> make_train_state<S>(const ModelConfig&, const TrainConfig&);                            \
  template class TrainingSet<S>;

HDRDIFF_INSTANTIATE(float)
HDRDIFF_INSTANTIATE(double)
#undef HDRDIFF_INSTANTIATE

}  // namespace hdrdiff
