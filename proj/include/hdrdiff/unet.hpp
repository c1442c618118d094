// Copyright 2026 The hdrdiff Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef HDRDIFF_UNET_HPP
#define HDRDIFF_UNET_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "hdrdiff/autodiff.hpp"
#include "hdrdiff/condition.hpp"
#include "hdrdiff/model_config.hpp"
#include "hdrdiff/params.hpp"
#include "hdrdiff/tonemap.hpp"

// Time-conditioned U-Net noise predictor. Layout:
//
//   F  = conv1x1(x_t)                      (x_t and the raw LDRs for ConcatLdr)
//   F' = eta * F + gamma                   (Dfa; a 1x1 fuse conv for ConcatAligned)
//   encoder: per level res_blocks residual blocks, then a stride-2 conv
//   bottleneck: residual block, self-attention, residual block
//   decoder: per level res_blocks + 1 residual blocks over skip concatenations,
//            then nearest 2x upsampling and a 3x3 conv
//   head: group norm, SiLU, zero-initialized 3x3 conv to 3 channels
//
// Residual blocks: GN -> SiLU -> conv3x3, plus a per-channel projection of the
// time embedding, then GN -> SiLU -> conv3x3 and a (1x1 when widths differ)
// skip path.

namespace hdrdiff {

/// Sinusoidal embedding: entries (2k, 2k+1) = (sin(t w_k), cos(t w_k)) with
/// w_k = 10000^(-k / (dim/2)).
std::vector<double> time_embedding(int t, int dim);

/// Every learnable tensor of the full model (condition generator and predictor).
std::vector<ParamSpec> declare_model_params(const ModelConfig& config);

/// Total parameter count, computed from the declarations without allocating.
std::int64_t parameter_count(const ModelConfig& config);

template <typename Scalar>
ParamStore<Scalar> init_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  return make_store<Scalar>(declare_model_params(config), seed);
}

/// Condition tensor consumed by predict_noise: x_tilde for Dfa and
/// ConcatAligned, the concatenated 18-channel LDR input for ConcatLdr.
template <typename Scalar>
ad::Var encode_condition(ad::Graph<Scalar>& g, const std::array<ad::Var, 3>& y, const ParamStore<Scalar>& params,
                         const ModelConfig& config);

template <typename Scalar>
ConditionFeatures<Scalar> encode_condition(const ConditionInput<Scalar>& input, const ParamStore<Scalar>& params,
                                           const ModelConfig& config);

template <typename Scalar>
ad::Var predict_noise(ad::Graph<Scalar>& g, ad::Var x_t, int t, ad::Var cond, const ParamStore<Scalar>& params,
                      const ModelConfig& config);

/// Forward-only evaluation of the predictor.
template <typename Scalar>
Tensor<Scalar> predict_noise(const Tensor<Scalar>& x_t, int t, const ConditionFeatures<Scalar>& cond,
                             const ParamStore<Scalar>& params, const ModelConfig& config);

}  // namespace hdrdiff

#endif  // HDRDIFF_UNET_HPP
