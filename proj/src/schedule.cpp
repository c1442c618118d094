// Copyright 2026 The hdrdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "hdrdiff/schedule.hpp"

#include <string>

#include "hdrdiff/errors.hpp"

namespace hdrdiff {

NoiseSchedule::NoiseSchedule(std::vector<double> betas) : betas_(std::move(betas)) {
  if (betas_.empty()) throw InvalidArgument("NoiseSchedule: T must be >= 1");
  alphas_.reserve(betas_.size());
  alpha_bars_.reserve(betas_.size() + 1);
  alpha_bars_.push_back(1.0);
  for (double b : betas_) {
    if (!(b > 0.0 && b < 1.0)) throw InvalidArgument("NoiseSchedule: beta outside (0, 1)");
    alphas_.push_back(1.0 - b);
    alpha_bars_.push_back(alpha_bars_.back() * (1.0 - b));
  }
}

double NoiseSchedule::beta(int t) const {
  if (t < 1 || t > steps()) throw IndexOutOfRange("beta: t=" + std::to_string(t));
  return betas_[t - 1];
}

double NoiseSchedule::alpha(int t) const {
  if (t < 1 || t > steps()) throw IndexOutOfRange("alpha: t=" + std::to_string(t));
  return alphas_[t - 1];
}

double NoiseSchedule::alpha_bar(int t) const {
  if (t < 0 || t > steps()) throw IndexOutOfRange("alpha_bar: t=" + std::to_string(t));
  return alpha_bars_[t];
}

double NoiseSchedule::posterior_variance(int t) const {
  return (1.0 - alpha_bar(t - 1)) / (1.0 - alpha_bar(t)) * beta(t);
}

NoiseSchedule linear_beta_schedule(int T, double beta_start, double beta_end) {
  if (T < 1) throw InvalidArgument("linear_beta_schedule: T must be >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0))
    throw InvalidArgument("linear_beta_schedule: require 0 < beta_start <= beta_end < 1");
  std::vector<double> betas(T);
  if (T == 1) {
    betas[0] = beta_start;
  } else {
    const double step = (beta_end - beta_start) / (T - 1);
    for (int i = 0; i < T; ++i) betas[i] = beta_start + step * i;
    betas[T - 1] = beta_end;
  }
  return NoiseSchedule(std::move(betas));
}

double alpha_bar(const NoiseSchedule& schedule, int t) { return schedule.alpha_bar(t); }

SamplingPlan make_plan(const NoiseSchedule& schedule, int num_steps) {
  const int T = schedule.steps();
  if (num_steps < 1 || num_steps > T)
    throw InvalidArgument("make_plan: num_steps must lie in [1, " + std::to_string(T) + "]");
  SamplingPlan plan;
  plan.steps.reserve(num_steps);
  for (long k = 0; k < num_steps; ++k) plan.steps.push_back(T - static_cast<int>(k * T / num_steps));
  return plan;
}

}  // namespace hdrdiff
