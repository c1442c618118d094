// Copyright 2026 The hdrdiff Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef HDRDIFF_SCHEDULE_HPP
#define HDRDIFF_SCHEDULE_HPP

#include <vector>

#include "hdrdiff/errors.hpp"

namespace hdrdiff {

/// Variance schedule of the forward diffusion chain.
///
/// Tables are stored in double precision. betas and alphas are indexed
/// 0..T-1 for timesteps 1..T; alpha_bars is indexed 0..T with
/// alpha_bars[0] == 1, so the posterior variance at t = 1 vanishes and the
/// last reverse step is deterministic.
class NoiseSchedule {
 public:
  explicit NoiseSchedule(std::vector<double> betas);

  int steps() const { return static_cast<int>(betas_.size()); }
  const std::vector<double>& betas() const { return betas_; }
  const std::vector<double>& alphas() const { return alphas_; }
  const std::vector<double>& alpha_bars() const { return alpha_bars_; }

  /// beta_t for t in [1, T].
  double beta(int t) const;
  /// alpha_t = 1 - beta_t for t in [1, T].
  double alpha(int t) const;
  /// Cumulative product for t in [0, T]; alpha_bar(0) == 1.
  double alpha_bar(int t) const;
  /// Posterior variance (1 - abar_{t-1}) / (1 - abar_t) * beta_t, t in [1, T].
  double posterior_variance(int t) const;

 private:
  std::vector<double> betas_;
  std::vector<double> alphas_;
  std::vector<double> alpha_bars_;
};

/// betas equally spaced from beta_start (t = 1) to beta_end (t = T).
NoiseSchedule linear_beta_schedule(int T, double beta_start, double beta_end);

double alpha_bar(const NoiseSchedule& schedule, int t);

/// Strictly decreasing timesteps in [1, T] visited by a reverse sampler.
/// The sampler's final step always targets t = 0.
struct SamplingPlan {
  std::vector<int> steps;

  int size() const { return static_cast<int>(steps.size()); }
  /// Timestep reached after visiting steps[i].
  int next(int i) const { return i + 1 < size() ? steps[i + 1] : 0; }
};

/// num_steps indices t_k = T - floor(k * T / num_steps), k = 0..num_steps-1.
SamplingPlan make_plan(const NoiseSchedule& schedule, int num_steps);

}  // namespace hdrdiff

#endif  // HDRDIFF_SCHEDULE_HPP
