// Copyright 2026 The hdrdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "hdrdiff/swne.hpp"

#include <random>
#include <string>

#include "hdrdiff/diffusion.hpp"
#include "hdrdiff/unet.hpp"

namespace hdrdiff {

namespace {

// Origins along one axis of length n for window extent e <= n.
std::vector<int> axis_origins(int n, int e, int cell) {
  std::vector<int> out;
  for (int o = 0; o <= n - e; o += cell) out.push_back(o);
  if (out.back() != n - e) out.push_back(n - e);
  return out;
}

}  // namespace

WindowPlan window_plan(int height, int width, int window, int cell) {
  if (height < 1 || width < 1) throw InvalidArgument("window_plan: image dims must be positive");
  if (cell < 1) throw InvalidArgument("window_plan: cell must be >= 1");
  if (window < cell) throw InvalidArgument("window_plan: window must be >= cell");
  WindowPlan plan{height, width, cell, window, {}};
  const int eh = std::min(window, height), ew = std::min(window, width);
  const std::vector<int> rows = axis_origins(height, eh, cell);
  const std::vector<int> cols = axis_origins(width, ew, cell);
  for (int r : rows)
    for (int c : cols) plan.windows.push_back({r, c, eh, ew});
  return plan;
}

template <typename Scalar>
void NoiseAccumulator<Scalar>::add(const Window& win, const Tensor<Scalar>& prediction) {
  if (prediction.height != win.height || prediction.width != win.width || prediction.channels() != theta.cols())
    throw ShapeMismatch("NoiseAccumulator::add: prediction " + shape_string(prediction) + " does not fit window");
  if (win.row < 0 || win.col < 0 || win.row + win.height > height || win.col + win.width > width)
    throw IndexOutOfRange("NoiseAccumulator::add: window outside image");
  for (int y = 0; y < win.height; ++y) {
    const Eigen::Index dst = Eigen::Index(win.row + y) * width + win.col;
    const Eigen::Index src = Eigen::Index(y) * win.width;
    theta.middleRows(dst, win.width) += prediction.data.middleRows(src, win.width);
    counts.middleRows(dst, win.width).array() += 1;
  }
}

template <typename Scalar>
Tensor<Scalar> NoiseAccumulator<Scalar>::mean() const {
  if ((counts.array() <= 0).any()) throw CoverageError("NoiseAccumulator: pixel not covered by any window");
  return Tensor<Scalar>(height, width, (theta.array() / counts.array().template cast<Scalar>()).matrix());
}

template <typename Scalar>
Tensor<Scalar> swne_estimate(const Tensor<Scalar>& x_t, const Tensor<Scalar>& cond, int t, const WindowPlan& plan,
                             const NoisePredictor<Scalar>& predictor) {
  if (cond.height != x_t.height || cond.width != x_t.width)
    throw ShapeMismatch("swne_estimate: condition " + shape_string(cond) + " vs latent " + shape_string(x_t));
  if (plan.height != x_t.height || plan.width != x_t.width)
    throw ShapeMismatch("swne_estimate: window plan built for a different image size");
  NoiseAccumulator<Scalar> acc(x_t.height, x_t.width, x_t.channels());
  const bool whole = plan.windows.size() == 1 && plan.windows[0].height == x_t.height &&
                     plan.windows[0].width == x_t.width;
  for (const Window& w : plan.windows) {
    if (whole) {
      acc.add(w, predictor(x_t, cond, t, w));
    } else {
      acc.add(w, predictor(x_t.crop(w.row, w.col, w.height, w.width), cond.crop(w.row, w.col, w.height, w.width), t, w));
    }
  }
  return acc.mean();
}

void SamplerConfig::validate(const NoiseSchedule& schedule) const {
  if (steps < 1 || steps > schedule.steps())
    throw InvalidArgument("sampler: steps must be in [1, " + std::to_string(schedule.steps()) + "]");
  if (cell < 1 || window < cell) throw InvalidArgument("sampler: need window >= cell >= 1");
  if (!(mu > 0.0)) throw InvalidArgument("sampler: mu must be positive");
}

template <typename Scalar>
Tensor<Scalar> swne_sample_latent(const Tensor<Scalar>& cond, const NoisePredictor<Scalar>& predictor,
                                  const NoiseSchedule& schedule, const SamplerConfig& config) {
  config.validate(schedule);
  const WindowPlan plan = window_plan(cond.height, cond.width, config.window, config.cell);
  const SamplingPlan steps = make_plan(schedule, config.steps);

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor<Scalar> x(cond.height, cond.width, 3);
  for (Eigen::Index i = 0; i < x.data.size(); ++i) x.data.data()[i] = Scalar(normal(rng));

  for (int i = 0; i < steps.size(); ++i) {
    const int t = steps.steps[i];
    const int t_prev = steps.next(i);
    const Tensor<Scalar> eps = swne_estimate(x, cond, t, plan, predictor);
    x = ddim_step(x, t, t_prev, eps, schedule, true);
    if (!all_finite(x))
      throw DivergenceError("swne_sample: non-finite latent after step t=" + std::to_string(t) + " -> " +
                            std::to_string(t_prev));
  }
  x.data = x.data.cwiseMax(Scalar(0)).cwiseMin(Scalar(1));
  return x;
}

template <typename Scalar>
HdrImage<Scalar> swne_sample(const Tensor<Scalar>& cond, const NoisePredictor<Scalar>& predictor,
                             const NoiseSchedule& schedule, const SamplerConfig& config) {
  return {mu_law_expand(swne_sample_latent(cond, predictor, schedule, config), config.mu)};
}

template <typename Scalar>
HdrImage<Scalar> swne_sample(const LdrSample<Scalar>& sample, const ParamStore<Scalar>& params,
                             const ModelConfig& model, const NoiseSchedule& schedule, const SamplerConfig& config) {
  validate(sample);
  const ConditionFeatures<Scalar> cond = encode_condition(assemble_condition_input(sample), params, model);
  const NoisePredictor<Scalar> predictor = [&](const Tensor<Scalar>& x, const Tensor<Scalar>& c, int t,
                                               const Window&) {
    return predict_noise(x, t, ConditionFeatures<Scalar>{c}, params, model);
  };
  return swne_sample(cond.x_tilde, predictor, schedule, config);
}

#define HDRDIFF_INSTANTIATE(S)                                                                                     \
  template struct NoiseAccumulator<S>;                                                                             \
  template Tensor<S> swne_estimate<S>(const Tensor<S>&, const Tensor<S>&, int, const WindowPlan&,                 \
                                      const NoisePredictor<S>&);                                                   \
  template Tensor<S> swne_sample_latent<S>(const Tensor<S>&, const NoisePredictor<S>&, const NoiseSchedule&,       \
                                           const SamplerConfig&);                                                  \
  template HdrImage<S> swne_sample<S>(const Tensor<S>&, const NoisePredictor<S>&, const NoiseSchedule&,            \
                                      const SamplerConfig&);                                                       \
  template HdrImage<S> swne_sample<S>(const LdrSample<S>&, const ParamStore<S>&, const ModelConfig&,               \
                                      const NoiseSchedule&, const SamplerConfig&);

HDRDIFF_INSTANTIATE(float)
HDRDIFF_INSTANTIATE(double)
#undef HDRDIFF_INSTANTIATE

}  // namespace hdrdiff
