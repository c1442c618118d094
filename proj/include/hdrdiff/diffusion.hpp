// Copyright 2026 The hdrdiff Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef HDRDIFF_DIFFUSION_HPP
#define HDRDIFF_DIFFUSION_HPP

#include <algorithm>
#include <cmath>
#include <string>

#include "hdrdiff/schedule.hpp"
#include "hdrdiff/tensor.hpp"

// Closed-form diffusion math. Every function is pure; schedule coefficients
// are evaluated in double and cast to the tensor scalar at the last moment.

namespace hdrdiff {

/// Noisy latent x_t at timestep t.
template <typename Scalar>
struct LatentState {
  Tensor<Scalar> x;
  int t = 0;
};

/// Mean and variance of q(x_{t-1} | x_t, x_0).
template <typename Scalar>
struct PosteriorParams {
  Tensor<Scalar> mu_tilde;
  double beta_tilde = 0.0;
};

namespace detail {
inline void check_timestep(const NoiseSchedule& s, int t, int lo, const char* where) {
  if (t < lo || t > s.steps())
    throw IndexOutOfRange(std::string(where) + ": t=" + std::to_string(t) + " outside [" +
                          std::to_string(lo) + ", " + std::to_string(s.steps()) + "]");
}
}  // namespace detail

/// sqrt(abar_t) * x0 + sqrt(1 - abar_t) * eps.
template <typename Scalar>
Tensor<Scalar> forward_diffuse(const Tensor<Scalar>& x0, int t, const Tensor<Scalar>& eps,
                               const NoiseSchedule& schedule) {
  require_same_shape(x0, eps, "forward_diffuse");
  detail::check_timestep(schedule, t, 1, "forward_diffuse");
  const double ab = schedule.alpha_bar(t);
  Tensor<Scalar> out(x0.height, x0.width, x0.channels());
  // Accumulate in double so the only rounding is the final cast.
  out.data = (std::sqrt(ab) * x0.data.template cast<double>() +
              std::sqrt(1.0 - ab) * eps.data.template cast<double>())
                 .template cast<Scalar>();
  return out;
}

/// Inverts forward_diffuse given a noise estimate. With clip set the result is
/// clamped to [0, 1].
template <typename Scalar>
Tensor<Scalar> predict_x0(const Tensor<Scalar>& x_t, int t, const Tensor<Scalar>& eps_hat,
                          const NoiseSchedule& schedule, bool clip) {
  require_same_shape(x_t, eps_hat, "predict_x0");
  detail::check_timestep(schedule, t, 1, "predict_x0");
  const double ab = schedule.alpha_bar(t);
  Tensor<Scalar> out(x_t.height, x_t.width, x_t.channels());
  out.data = ((x_t.data.template cast<double>() - std::sqrt(1.0 - ab) * eps_hat.data.template cast<double>()) /
              std::sqrt(ab))
                 .template cast<Scalar>();
  if (clip) out.data = out.data.cwiseMax(Scalar(0)).cwiseMin(Scalar(1));
  return out;
}

/// Posterior mean and variance of q(x_{t-1} | x_t, x0_hat).
template <typename Scalar>
PosteriorParams<Scalar> posterior(const Tensor<Scalar>& x_t, const Tensor<Scalar>& x0_hat, int t,
                                  const NoiseSchedule& schedule) {
  require_same_shape(x_t, x0_hat, "posterior");
  detail::check_timestep(schedule, t, 1, "posterior");
  const double ab = schedule.alpha_bar(t);
  const double ab_prev = schedule.alpha_bar(t - 1);
  const double beta = schedule.beta(t);
  const double c_x0 = std::sqrt(ab_prev) * beta / (1.0 - ab);
  const double c_xt = std::sqrt(schedule.alpha(t)) * (1.0 - ab_prev) / (1.0 - ab);
  PosteriorParams<Scalar> p;
  p.mu_tilde = Tensor<Scalar>(x_t.height, x_t.width, x_t.channels());
  p.mu_tilde.data = Scalar(c_x0) * x0_hat.data + Scalar(c_xt) * x_t.data;
  p.beta_tilde = schedule.posterior_variance(t);
  return p;
}

/// Generalized implicit update
///   x_prev = sqrt(abar_prev) x0_hat + sqrt(1 - abar_prev - sigma^2) eps_hat + sigma z.
/// sigma = 0 is the deterministic sampler; sigma^2 = beta_tilde_t with
/// t_prev = t - 1 reproduces the ancestral chain.
template <typename Scalar>
Tensor<Scalar> implicit_step(const Tensor<Scalar>& x_t, int t, int t_prev, const Tensor<Scalar>& eps_hat,
                             double sigma, const Tensor<Scalar>* z, const NoiseSchedule& schedule,
                             bool clip) {
  detail::check_timestep(schedule, t, 1, "implicit_step");
  if (t_prev >= t || t_prev < 0)
    throw OrderingError("implicit_step: need t > t_prev >= 0, got t=" + std::to_string(t) +
                        " t_prev=" + std::to_string(t_prev));
  const Tensor<Scalar> x0_hat = predict_x0(x_t, t, eps_hat, schedule, clip);
  const double ab_prev = schedule.alpha_bar(t_prev);
  const double dir = std::sqrt(std::max(0.0, 1.0 - ab_prev - sigma * sigma));
  Tensor<Scalar> out(x_t.height, x_t.width, x_t.channels());
  out.data = Scalar(std::sqrt(ab_prev)) * x0_hat.data + Scalar(dir) * eps_hat.data;
  if (sigma != 0.0) {
    if (z == nullptr) throw InvalidArgument("implicit_step: sigma > 0 requires noise z");
    require_same_shape(x_t, *z, "implicit_step");
    out.data += Scalar(sigma) * z->data;
  }
  return out;
}

/// Deterministic implicit step t -> t_prev. Stepping to t_prev = 0 returns
/// predict_x0(x_t, t, eps_hat, clip).
template <typename Scalar>
Tensor<Scalar> ddim_step(const Tensor<Scalar>& x_t, int t, int t_prev, const Tensor<Scalar>& eps_hat,
                         const NoiseSchedule& schedule, bool clip) {
  return implicit_step<Scalar>(x_t, t, t_prev, eps_hat, 0.0, nullptr, schedule, clip);
}

/// Ancestral step t -> t-1: mu_tilde + sqrt(beta_tilde) z. z must be zero at t = 1.
template <typename Scalar>
Tensor<Scalar> ddpm_step(const Tensor<Scalar>& x_t, int t, const Tensor<Scalar>& eps_hat,
                         const Tensor<Scalar>& z, const NoiseSchedule& schedule, bool clip) {
  require_same_shape(x_t, z, "ddpm_step");
  detail::check_timestep(schedule, t, 1, "ddpm_step");
  if (t == 1 && !z.data.isZero(0)) throw InvalidArgument("ddpm_step: z must be zero at t = 1");
  const Tensor<Scalar> x0_hat = predict_x0(x_t, t, eps_hat, schedule, clip);
  PosteriorParams<Scalar> p = posterior(x_t, x0_hat, t, schedule);
  p.mu_tilde.data += Scalar(std::sqrt(p.beta_tilde)) * z.data;
  return std::move(p.mu_tilde);
}

}  // namespace hdrdiff

#endif  // HDRDIFF_DIFFUSION_HPP
