// Copyright 2026 The hdrdiff Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef HDRDIFF_SWNE_HPP
#define HDRDIFF_SWNE_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "hdrdiff/condition.hpp"
#include "hdrdiff/model_config.hpp"
#include "hdrdiff/params.hpp"
#include "hdrdiff/schedule.hpp"
#include "hdrdiff/tensor.hpp"
#include "hdrdiff/tonemap.hpp"

// Sliding-window noise estimation: at every timestep the noise predictor is
// run on overlapping windows and the per-pixel mean of the overlapping
// predictions replaces the whole-image estimate.

namespace hdrdiff {

struct Window {
  int row = 0;
  int col = 0;
  int height = 0;
  int width = 0;
};

/// Window origins advance by `cell` pixels; the last origin per axis is
/// clamped so the window ends at the image border. An axis shorter than
/// `window` is covered by a single window spanning the whole axis.
struct WindowPlan {
  int height = 0;
  int width = 0;
  int cell = 0;
  int window = 0;
  std::vector<Window> windows;  ///< row-major by origin
};

WindowPlan window_plan(int height, int width, int window, int cell);

/// Theta (sum of predictions) and M (per-pixel visit counts, shared by all
/// channels) over an H x W x C image, stored as (H*W) x C like Tensor.
template <typename Scalar>
struct NoiseAccumulator {
  int height = 0;
  int width = 0;
  Matrix<Scalar> theta;
  Eigen::MatrixXi counts;

  NoiseAccumulator(int h, int w, int c)
      : height(h), width(w), theta(Matrix<Scalar>::Zero(Eigen::Index(h) * w, c)),
        counts(Eigen::MatrixXi::Zero(Eigen::Index(h) * w, c)) {}

  void add(const Window& win, const Tensor<Scalar>& prediction);

  /// Theta / M; throws CoverageError if some pixel was never visited.
  Tensor<Scalar> mean() const;
};

/// Noise prediction for one window: (x_t patch, condition patch, t, window).
template <typename Scalar>
using NoisePredictor =
    std::function<Tensor<Scalar>(const Tensor<Scalar>&, const Tensor<Scalar>&, int, const Window&)>;

template <typename Scalar>
Tensor<Scalar> swne_estimate(const Tensor<Scalar>& x_t, const Tensor<Scalar>& cond, int t, const WindowPlan& plan,
                             const NoisePredictor<Scalar>& predictor);

struct SamplerConfig {
  int steps = 25;
  int window = 512;
  int cell = 128;
  std::uint64_t seed = 0;
  double mu = kDefaultMu;

  void validate(const NoiseSchedule& schedule) const;
};

/// Deterministic implicit sampling over the plan's timesteps with SWNE noise
/// estimates. Returns the clipped final latent in the tonemapped domain.
template <typename Scalar>
Tensor<Scalar> swne_sample_latent(const Tensor<Scalar>& cond, const NoisePredictor<Scalar>& predictor,
                                  const NoiseSchedule& schedule, const SamplerConfig& config);

/// Latent sampling followed by mu-law expansion to linear HDR.
template <typename Scalar>
HdrImage<Scalar> swne_sample(const Tensor<Scalar>& cond, const NoisePredictor<Scalar>& predictor,
                             const NoiseSchedule& schedule, const SamplerConfig& config);

/// Full pipeline for a trained model: the condition is encoded once at full
/// resolution and sliced per window. `params` are used as given (pass the
/// EMA weights for evaluation).
template <typename Scalar>
HdrImage<Scalar> swne_sample(const LdrSample<Scalar>& sample, const ParamStore<Scalar>& params,
                             const ModelConfig& model, const NoiseSchedule& schedule, const SamplerConfig& config);

}  // namespace hdrdiff

#endif  // HDRDIFF_SWNE_HPP
