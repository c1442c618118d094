// Copyright 2026 The hdrdiff Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef HDRDIFF_CONDITION_HPP
#define HDRDIFF_CONDITION_HPP

#include <array>
#include <utility>
#include <vector>

#include "hdrdiff/autodiff.hpp"
#include "hdrdiff/model_config.hpp"
#include "hdrdiff/params.hpp"
#include "hdrdiff/tonemap.hpp"

// Feature condition generator: reference-guided attention alignment of the
// three LDR frames and the DFA mapping that turns aligned features into a
// spatial, feature-wise affine modulation.

namespace hdrdiff {

/// Implicitly aligned LDR features x_tilde, (H, W, F_c).
template <typename Scalar>
struct ConditionFeatures {
  Tensor<Scalar> x_tilde;
};

/// Scale eta and shift gamma, both shaped like the modulated feature map.
template <typename Scalar>
struct ModulationPair {
  Tensor<Scalar> eta;
  Tensor<Scalar> gamma_shift;
};

/// Parameters of the attention module (prefix "cond/") and, for DFA
/// conditioning, of the two-convolution mapping ("cond/dfa.").
void declare_condition_params(const ModelConfig& config, std::vector<ParamSpec>& out);

/// Attention maps of the two non-reference frames, kept for inspection.
struct AttentionMaps {
  ad::Var low;
  ad::Var high;
};

/// x_tilde = merge([a_1 * f_1, f_2, a_3 * f_3]) with f_i = conv(y_i) and
/// a_i = sigmoid(conv2(relu(conv1([f_i, f_2])))). Frame index 1 is the reference.
template <typename Scalar>
ad::Var attention_align(ad::Graph<Scalar>& g, const std::array<ad::Var, 3>& y, const ParamStore<Scalar>& params,
                        AttentionMaps* maps = nullptr);

/// (eta, gamma) = split(conv2(relu(conv1(x_tilde)))).
template <typename Scalar>
std::pair<ad::Var, ad::Var> dfa_params(ad::Graph<Scalar>& g, ad::Var cond, const ParamStore<Scalar>& params);

/// eta * F + gamma.
template <typename Scalar>
ad::Var dfa_apply(ad::Graph<Scalar>& g, ad::Var features, ad::Var eta, ad::Var gamma_shift) {
  return ad::add(g, ad::mul(g, features, eta), gamma_shift);
}

template <typename Scalar>
ConditionFeatures<Scalar> attention_align(const ConditionInput<Scalar>& input, const ParamStore<Scalar>& params);

template <typename Scalar>
ModulationPair<Scalar> dfa_params(const ConditionFeatures<Scalar>& cond, const ParamStore<Scalar>& params);

template <typename Scalar>
Tensor<Scalar> dfa_apply(const Tensor<Scalar>& features, const ModulationPair<Scalar>& mod) {
  require_same_shape(features, mod.eta, "dfa_apply");
  require_same_shape(features, mod.gamma_shift, "dfa_apply");
  Tensor<Scalar> out(features.height, features.width, features.channels());
  out.data = features.data.cwiseProduct(mod.eta.data) + mod.gamma_shift.data;
  return out;
}

}  // namespace hdrdiff

#endif  // HDRDIFF_CONDITION_HPP
