// Copyright 2026 The hdrdiff Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef HDRDIFF_TONEMAP_HPP
#define HDRDIFF_TONEMAP_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "hdrdiff/tensor.hpp"

namespace hdrdiff {

inline constexpr double kDefaultMu = 5000.0;
inline constexpr double kDefaultGamma = 2.2;

/// Linear radiance map, entries in [0, 1].
template <typename Scalar>
struct HdrImage {
  Tensor<Scalar> data;
};

/// Three exposure-bracketed LDR frames, ordered low / medium / high exposure.
/// The medium frame is the reference and has relative exposure 1.
template <typename Scalar>
struct LdrSample {
  std::array<Tensor<Scalar>, 3> ldrs;
  std::array<double, 3> exposures{0.25, 1.0, 4.0};
  double gamma = kDefaultGamma;

  static constexpr int kReference = 1;
};

/// The three 6-channel tensors y_i = [Y_i, H_i] fed to the condition generator.
template <typename Scalar>
struct ConditionInput {
  std::array<Tensor<Scalar>, 3> frames;
};

namespace detail {
template <typename Scalar>
void check_unit_range(const Tensor<Scalar>& x, const char* where) {
  constexpr double tol = 1e-6;
  if (x.size() == 0) return;
  const double lo = static_cast<double>(x.data.minCoeff());
  const double hi = static_cast<double>(x.data.maxCoeff());
  if (!(lo >= -tol && hi <= 1.0 + tol))
    throw DomainError(std::string(where) + ": entries must lie in [0, 1], found [" + std::to_string(lo) +
                      ", " + std::to_string(hi) + "]");
}
}  // namespace detail

/// log(1 + mu x) / log(1 + mu), elementwise.
template <typename Scalar>
Tensor<Scalar> mu_law_compress(const Tensor<Scalar>& x, double mu = kDefaultMu) {
  if (!(mu > 0.0)) throw InvalidArgument("mu_law_compress: mu must be positive");
  detail::check_unit_range(x, "mu_law_compress");
  const Scalar m(mu);
  const Scalar norm(1.0 / std::log1p(mu));
  Tensor<Scalar> out(x.height, x.width, x.channels());
  out.data = x.data.unaryExpr([&](Scalar v) {
    v = std::clamp(v, Scalar(0), Scalar(1));
    return std::log1p(m * v) * norm;
  });
  return out;
}

/// (exp(x log(1 + mu)) - 1) / mu, the inverse of mu_law_compress.
template <typename Scalar>
Tensor<Scalar> mu_law_expand(const Tensor<Scalar>& x0, double mu = kDefaultMu) {
  if (!(mu > 0.0)) throw InvalidArgument("mu_law_expand: mu must be positive");
  detail::check_unit_range(x0, "mu_law_expand");
  const Scalar scale(std::log1p(mu));
  const Scalar inv_mu(1.0 / mu);
  Tensor<Scalar> out(x0.height, x0.width, x0.channels());
  out.data = x0.data.unaryExpr([&](Scalar v) {
    v = std::clamp(v, Scalar(0), Scalar(1));
    return std::expm1(v * scale) * inv_mu;
  });
  return out;
}

/// Gamma-linearized radiance estimate Y^gamma / exposure.
template <typename Scalar>
Tensor<Scalar> ldr_to_hdr_domain(const Tensor<Scalar>& Y, double exposure, double gamma = kDefaultGamma) {
  if (!(exposure > 0.0)) throw InvalidArgument("ldr_to_hdr_domain: exposure must be positive");
  if (!(gamma > 0.0)) throw InvalidArgument("ldr_to_hdr_domain: gamma must be positive");
  detail::check_unit_range(Y, "ldr_to_hdr_domain");
  const Scalar g(gamma);
  const Scalar inv_e(1.0 / exposure);
  Tensor<Scalar> out(Y.height, Y.width, Y.channels());
  out.data = Y.data.unaryExpr([&](Scalar v) { return std::pow(std::max(v, Scalar(0)), g) * inv_e; });
  return out;
}

template <typename Scalar>
void validate(const LdrSample<Scalar>& s) {
  for (int i = 1; i < 3; ++i)
    if (!s.ldrs[i].same_shape(s.ldrs[0])) throw ShapeMismatch("LdrSample: frame dimensions differ");
  if (s.ldrs[0].channels() != 3) throw ShapeMismatch("LdrSample: frames must have 3 channels");
  if (!(s.exposures[0] > 0.0 && s.exposures[0] < s.exposures[1] && s.exposures[1] < s.exposures[2]))
    throw InvalidArgument("LdrSample: exposures must be positive and strictly increasing");
  if (!(s.gamma > 0.0)) throw InvalidArgument("LdrSample: gamma must be positive");
}

/// y_i = concat(Y_i, clip(H_i, 0, 1)) for i = 1, 2, 3.
template <typename Scalar>
ConditionInput<Scalar> assemble_condition_input(const LdrSample<Scalar>& sample) {
  validate(sample);
  ConditionInput<Scalar> in;
  for (int i = 0; i < 3; ++i) {
    Tensor<Scalar> h = ldr_to_hdr_domain(sample.ldrs[i], sample.exposures[i], sample.gamma);
    h.data = h.data.cwiseMin(Scalar(1));
    in.frames[i] = concat_channels<Scalar>({&sample.ldrs[i], &h});
  }
  return in;
}

}  // namespace hdrdiff

#endif  // HDRDIFF_TONEMAP_HPP
