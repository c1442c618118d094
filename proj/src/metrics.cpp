// Copyright 2026 The hdrdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "hdrdiff/metrics.hpp"

#include <array>
#include <cmath>

namespace hdrdiff {

namespace {

constexpr int kWin = 11;
constexpr double kSigma = 1.5;

std::array<double, kWin> gaussian_taps() {
  std::array<double, kWin> w{};
  double sum = 0.0;
  for (int i = 0; i < kWin; ++i) {
    const double d = i - kWin / 2;
    w[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

using Image = Eigen::MatrixXd;  // rows = y, cols = x

// Valid-region separable filtering.
Image filter_valid(const Image& in, const std::array<double, kWin>& w) {
  const Eigen::Index oh = in.rows() - kWin + 1, ow = in.cols() - kWin + 1;
  Image tmp = Image::Zero(in.rows(), ow);
  for (int k = 0; k < kWin; ++k) tmp += w[k] * in.middleCols(k, ow);
  Image out = Image::Zero(oh, ow);
  for (int k = 0; k < kWin; ++k) out += w[k] * tmp.middleRows(k, oh);
  return out;
}

Image grayscale(const Tensor<double>& t) {
  Image g(t.height, t.width);
  const Eigen::VectorXd mean = t.data.rowwise().mean();
  for (int y = 0; y < t.height; ++y)
    for (int x = 0; x < t.width; ++x) g(y, x) = mean(Eigen::Index(y) * t.width + x);
  return g;
}

}  // namespace

double ssim(const Tensor<double>& a, const Tensor<double>& b) {
  require_same_shape(a, b, "ssim");
  if (a.height < kWin || a.width < kWin)
    throw InvalidArgument("ssim: images smaller than the 11x11 window: " + shape_string(a));
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  const auto w = gaussian_taps();
  const Image x = grayscale(a), y = grayscale(b);
  const Image mx = filter_valid(x, w), my = filter_valid(y, w);
  const Image sxx = filter_valid(x.cwiseProduct(x), w) - mx.cwiseProduct(mx);
  const Image syy = filter_valid(y.cwiseProduct(y), w) - my.cwiseProduct(my);
  const Image sxy = filter_valid(x.cwiseProduct(y), w) - mx.cwiseProduct(my);
  const Eigen::ArrayXXd num = (2.0 * mx.cwiseProduct(my).array() + c1) * (2.0 * sxy.array() + c2);
  const Eigen::ArrayXXd den = (mx.cwiseAbs2().array() + my.cwiseAbs2().array() + c1) * (sxx.array() + syy.array() + c2);
  return (num / den).mean();
}

}  // namespace hdrdiff
