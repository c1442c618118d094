// Copyright 2026 The hdrdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "hdrdiff/condition.hpp"

#include <string>

namespace hdrdiff {

namespace {

constexpr ad::ConvSpec kReflect3{3, 1, ad::Padding::Reflect};

void conv_spec(std::vector<ParamSpec>& out, const std::string& name, int k, int cin, int cout) {
  out.push_back({name + ".w", {k, k, cin, cout}, Init::VarianceScaled, k * k * cin, {}});
  out.push_back({name + ".b", {cout}, Init::Zero, 1, {}});
}

template <typename Scalar>
ad::Var conv(ad::Graph<Scalar>& g, ad::Var x, const ParamStore<Scalar>& p, const std::string& name) {
  return ad::conv2d(g, x, param(g, p, name + ".w"), param(g, p, name + ".b"), kReflect3);
}

template <typename Scalar>
ad::Var attention_gate(ad::Graph<Scalar>& g, ad::Var f, ad::Var ref, const ParamStore<Scalar>& p,
                       const std::string& name) {
  ad::Var h = ad::relu(g, conv(g, ad::concat(g, {f, ref}), p, name + ".conv1"));
  return ad::sigmoid(g, conv(g, h, p, name + ".conv2"));
}

}  // namespace

void declare_condition_params(const ModelConfig& config, std::vector<ParamSpec>& out) {
  if (config.conditioning == Conditioning::ConcatLdr) return;
  const int fc = config.features();
  conv_spec(out, "cond/feat", 3, 6, fc);
  for (const char* frame : {"cond/att_low", "cond/att_high"}) {
    conv_spec(out, std::string(frame) + ".conv1", 3, 2 * fc, fc);
    conv_spec(out, std::string(frame) + ".conv2", 3, fc, fc);
  }
  conv_spec(out, "cond/merge", 3, 3 * fc, fc);
  if (config.conditioning == Conditioning::Dfa) {
    const int c = config.base_channels;
    conv_spec(out, "cond/dfa.conv1", 3, fc, fc);
    // Identity start: zero weights, eta-half bias 1, gamma-half bias 0.
    std::vector<double> bias(2 * c, 0.0);
    std::fill(bias.begin(), bias.begin() + c, 1.0);
    out.push_back({"cond/dfa.conv2.w", {3, 3, fc, 2 * c}, Init::Zero, 9 * fc, {}});
    out.push_back({"cond/dfa.conv2.b", {2 * c}, Init::Constant, 1, std::move(bias)});
  }
}

template <typename Scalar>
ad::Var attention_align(ad::Graph<Scalar>& g, const std::array<ad::Var, 3>& y, const ParamStore<Scalar>& params,
                        AttentionMaps* maps) {
  for (int i = 0; i < 3; ++i) {
    if (g.channels(y[i]) != 6) throw ShapeMismatch("attention_align: frames must have 6 channels");
    if (g.height(y[i]) != g.height(y[1]) || g.width(y[i]) != g.width(y[1]))
      throw ShapeMismatch("attention_align: frame dimensions differ");
  }
  const ad::Var f_low = conv(g, y[0], params, "cond/feat");
  const ad::Var f_ref = conv(g, y[1], params, "cond/feat");
  const ad::Var f_high = conv(g, y[2], params, "cond/feat");
  const ad::Var a_low = attention_gate(g, f_low, f_ref, params, "cond/att_low");
  const ad::Var a_high = attention_gate(g, f_high, f_ref, params, "cond/att_high");
  if (maps) *maps = {a_low, a_high};
  const ad::Var merged = ad::concat(g, {ad::mul(g, f_low, a_low), f_ref, ad::mul(g, f_high, a_high)});
  return conv(g, merged, params, "cond/merge");
}

template <typename Scalar>
std::pair<ad::Var, ad::Var> dfa_params(ad::Graph<Scalar>& g, ad::Var cond, const ParamStore<Scalar>& params) {
  const ad::Var h = ad::relu(g, conv(g, cond, params, "cond/dfa.conv1"));
  const ad::Var out = conv(g, h, params, "cond/dfa.conv2");
  const int c = g.channels(out) / 2;
  return {ad::slice_channels(g, out, 0, c), ad::slice_channels(g, out, c, c)};
}

template <typename Scalar>
ConditionFeatures<Scalar> attention_align(const ConditionInput<Scalar>& input, const ParamStore<Scalar>& params) {
  ad::Graph<Scalar> g(false);
  std::array<ad::Var, 3> y;
  for (int i = 0; i < 3; ++i) y[i] = g.constant(input.frames[i]);
  return {g.tensor(attention_align(g, y, params))};
}

template <typename Scalar>
ModulationPair<Scalar> dfa_params(const ConditionFeatures<Scalar>& cond, const ParamStore<Scalar>& params) {
  ad::Graph<Scalar> g(false);
  auto [eta, gamma] = dfa_params(g, g.constant(cond.x_tilde), params);
  return {g.tensor(eta), g.tensor(gamma)};
}

#define HDRDIFF_INSTANTIATE(S)                                                                                  \
  template ad::Var attention_align<S>(ad::Graph<S>&, const std::array<ad::Var, 3>&, const ParamStore<S>&,     \
                                      AttentionMaps*);                                                        \
  template std::pair<ad::Var, ad::Var> dfa_params<S>(ad::Graph<S>&, ad::Var, const ParamStore<S>&);          \
  template ConditionFeatures<S> attention_align<S>(const ConditionInput<S>&, const ParamStore<S>&);           \
  template ModulationPair<S> dfa_params<S>(const ConditionFeatures<S>&, const ParamStore<S>&);

HDRDIFF_INSTANTIATE(float)
HDRDIFF_INSTANTIATE(double)
#undef HDRDIFF_INSTANTIATE

}  // namespace hdrdiff
