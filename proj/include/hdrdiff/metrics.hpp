// Copyright 2026 The hdrdiff Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef HDRDIFF_METRICS_HPP
#define HDRDIFF_METRICS_HPP

#include <algorithm>
#include <cmath>

#include "hdrdiff/tensor.hpp"
#include "hdrdiff/tonemap.hpp"

namespace hdrdiff {

/// PSNR reported for identical inputs.
inline constexpr double kPsnrCap = 99.0;

/// 10 log10(1 / MSE) with peak 1, capped at kPsnrCap.
template <typename Scalar>
double psnr(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  require_same_shape(a, b, "psnr");
  if (a.size() == 0) throw InvalidArgument("psnr: empty tensors");
  const double mse = (a.data.template cast<double>() - b.data.template cast<double>()).squaredNorm() /
                     static_cast<double>(a.size());
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

/// Mean SSIM of the channel-mean grayscale images: 11x11 Gaussian window
/// (sigma 1.5), K1 = 0.01, K2 = 0.03, peak 1, over fully covered positions.
double ssim(const Tensor<double>& a, const Tensor<double>& b);

template <typename Scalar>
double ssim(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  return ssim(a.template cast<double>(), b.template cast<double>());
}

struct MetricReport {
  double psnr_l = 0.0;
  double psnr_mu = 0.0;
  double ssim_l = 0.0;
  double ssim_mu = 0.0;
};

/// Linear-domain metrics on the clamped images, tonemapped metrics after mu-law compression.
template <typename Scalar>
MetricReport evaluate(const Tensor<Scalar>& pred, const Tensor<Scalar>& gt, double mu = kDefaultMu) {
  require_same_shape(pred, gt, "evaluate");
  Tensor<double> p = pred.template cast<double>(), g = gt.template cast<double>();
  p.data = p.data.cwiseMax(0.0).cwiseMin(1.0);
  g.data = g.data.cwiseMax(0.0).cwiseMin(1.0);
  const Tensor<double> pm = mu_law_compress(p, mu), gm = mu_law_compress(g, mu);
  return {psnr(p, g), psnr(pm, gm), ssim(p, g), ssim(pm, gm)};
}

}  // namespace hdrdiff

#endif  // HDRDIFF_METRICS_HPP
