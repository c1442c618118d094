// Copyright 2026 The hdrdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "hdrdiff/unet.hpp"

#include <cmath>
#include <string>

namespace hdrdiff {

std::string to_string(Conditioning c) {
  switch (c) {
    case Conditioning::Dfa:
      return "dfa";
    case Conditioning::ConcatAligned:
      return "concat_aligned";
    case Conditioning::ConcatLdr:
      return "concat_ldr";
  }
  return "?";
}

Conditioning parse_conditioning(const std::string& s) {
  if (s == "dfa") return Conditioning::Dfa;
  if (s == "concat_aligned") return Conditioning::ConcatAligned;
  if (s == "concat_ldr") return Conditioning::ConcatLdr;
  throw InvalidArgument("unknown conditioning '" + s + "' (expected dfa, concat_aligned or concat_ldr)");
}

void ModelConfig::validate() const {
  if (base_channels <= 0 || base_channels % 2 != 0)
    throw InvalidArgument("ModelConfig: base_channels must be positive and even");
  if (channel_multipliers.empty()) throw InvalidArgument("ModelConfig: channel_multipliers is empty");
  for (int m : channel_multipliers)
    if (m <= 0) throw InvalidArgument("ModelConfig: channel multipliers must be positive");
  if (res_blocks < 1) throw InvalidArgument("ModelConfig: res_blocks must be >= 1");
  if (time_embed_dim < 1) throw InvalidArgument("ModelConfig: time_embed_dim must be >= 1");
  if (cond_features < 0) throw InvalidArgument("ModelConfig: cond_features must be >= 0");
  for (int l : attn_levels)
    if (l < 0 || l >= levels()) throw InvalidArgument("ModelConfig: attention level out of range");
}

std::vector<double> time_embedding(int t, int dim) {
  if (dim <= 0 || dim % 2 != 0) throw InvalidArgument("time_embedding: dim must be positive and even");
  if (t < 0) throw InvalidArgument("time_embedding: t must be >= 0");
  const int half = dim / 2;
  std::vector<double> e(dim);
  for (int k = 0; k < half; ++k) {
    const double w = std::exp(-std::log(10000.0) * k / half);
    e[2 * k] = std::sin(t * w);
    e[2 * k + 1] = std::cos(t * w);
  }
  return e;
}

namespace {

constexpr ad::ConvSpec kConv3{3, 1, ad::Padding::Zero};
constexpr ad::ConvSpec kConv1{1, 1, ad::Padding::Zero};
constexpr ad::ConvSpec kDown{3, 2, ad::Padding::Zero};

// The U-Net body as a flat list of stages shared by declaration and forward.
struct Stage {
  enum Kind { Res, Attn, Down, Up, Push, PopConcat } kind;
  std::string name;
  int cin = 0;
  int cout = 0;
};

std::vector<Stage> body_stages(const ModelConfig& cfg) {
  std::vector<Stage> s;
  const int C = cfg.base_channels;
  const int L = cfg.levels();
  int pre = C;
  std::vector<int> skips{C};
  s.push_back({Stage::Push, "", C, C});
  for (int l = 0; l < L; ++l) {
    const int ch = C * cfg.channel_multipliers[l];
    const std::string lv = "unet/down" + std::to_string(l);
    for (int i = 0; i < cfg.res_blocks; ++i) {
      s.push_back({Stage::Res, lv + ".block" + std::to_string(i), pre, ch});
      pre = ch;
      if (cfg.attn_levels.count(l)) s.push_back({Stage::Attn, lv + ".attn" + std::to_string(i), ch, ch});
      s.push_back({Stage::Push, "", ch, ch});
      skips.push_back(ch);
    }
    if (l + 1 < L) {
      s.push_back({Stage::Down, lv + ".downsample", pre, pre});
      s.push_back({Stage::Push, "", pre, pre});
      skips.push_back(pre);
    }
  }
  s.push_back({Stage::Res, "unet/mid.block1", pre, pre});
  s.push_back({Stage::Attn, "unet/mid.attn", pre, pre});
  s.push_back({Stage::Res, "unet/mid.block2", pre, pre});
  for (int l = L - 1; l >= 0; --l) {
    const int ch = C * cfg.channel_multipliers[l];
    const std::string lv = "unet/up" + std::to_string(l);
    for (int i = 0; i <= cfg.res_blocks; ++i) {
      const int skip = skips.back();
      skips.pop_back();
      s.push_back({Stage::PopConcat, "", pre, pre + skip});
      s.push_back({Stage::Res, lv + ".block" + std::to_string(i), pre + skip, ch});
      pre = ch;
      if (cfg.attn_levels.count(l)) s.push_back({Stage::Attn, lv + ".attn" + std::to_string(i), ch, ch});
    }
    if (l > 0) s.push_back({Stage::Up, lv + ".upsample", pre, pre});
  }
  return s;
}

void conv_spec(std::vector<ParamSpec>& out, const std::string& name, int k, int cin, int cout, bool bias = true,
               Init init = Init::VarianceScaled) {
  out.push_back({name + ".w", {k, k, cin, cout}, init, k * k * cin, {}});
  if (bias) out.push_back({name + ".b", {cout}, Init::Zero, 1, {}});
}

void linear_spec(std::vector<ParamSpec>& out, const std::string& name, int in, int outc) {
  out.push_back({name + ".w", {in, outc}, Init::VarianceScaled, in, {}});
  out.push_back({name + ".b", {outc}, Init::Zero, 1, {}});
}

void norm_spec(std::vector<ParamSpec>& out, const std::string& name, int c) {
  out.push_back({name + ".g", {c}, Init::Constant, 1, {1.0}});
  out.push_back({name + ".b", {c}, Init::Zero, 1, {}});
}

void declare_stage(std::vector<ParamSpec>& out, const Stage& st, const ModelConfig& cfg) {
  switch (st.kind) {
    case Stage::Res:
      norm_spec(out, st.name + ".norm1", st.cin);
      conv_spec(out, st.name + ".conv1", 3, st.cin, st.cout);
      linear_spec(out, st.name + ".temb", cfg.time_embed_dim, st.cout);
      norm_spec(out, st.name + ".norm2", st.cout);
      conv_spec(out, st.name + ".conv2", 3, st.cout, st.cout);
      if (st.cin != st.cout) conv_spec(out, st.name + ".skip", 1, st.cin, st.cout);
      break;
    case Stage::Attn:
      norm_spec(out, st.name + ".norm", st.cin);
      conv_spec(out, st.name + ".qkv", 1, st.cin, 3 * st.cin, false);
      conv_spec(out, st.name + ".proj", 1, st.cin, st.cin);
      break;
    case Stage::Down:
    case Stage::Up:
      conv_spec(out, st.name, 3, st.cin, st.cout);
      break;
    case Stage::Push:
    case Stage::PopConcat:
      break;
  }
}

template <typename Scalar>
struct Net {
  ad::Graph<Scalar>& g;
  const ParamStore<Scalar>& p;

  ad::Var w(const std::string& n) { return param(g, p, n); }

  ad::Var conv(ad::Var x, const std::string& name, const ad::ConvSpec& spec, bool bias = true) {
    return ad::conv2d(g, x, w(name + ".w"), bias ? w(name + ".b") : ad::Var{}, spec);
  }

  ad::Var norm(ad::Var x, const std::string& name) {
    return ad::group_norm(g, x, w(name + ".g"), w(name + ".b"), norm_groups(g.channels(x)));
  }

  ad::Var res_block(ad::Var x, ad::Var temb_act, const Stage& st) {
    ad::Var h = conv(ad::silu(g, norm(x, st.name + ".norm1")), st.name + ".conv1", kConv3);
    h = ad::add_channels(g, h, conv(temb_act, st.name + ".temb", kConv1));
    h = conv(ad::silu(g, norm(h, st.name + ".norm2")), st.name + ".conv2", kConv3);
    const ad::Var skip = st.cin != st.cout ? conv(x, st.name + ".skip", kConv1) : x;
    return ad::add(g, h, skip);
  }

  ad::Var attention(ad::Var x, const Stage& st) {
    const int c = g.channels(x);
    const ad::Var qkv = conv(norm(x, st.name + ".norm"), st.name + ".qkv", kConv1, false);
    const ad::Var a = ad::dot_product_attention(g, ad::slice_channels(g, qkv, 0, c), ad::slice_channels(g, qkv, c, c),
                                                ad::slice_channels(g, qkv, 2 * c, c));
    return ad::add(g, x, conv(a, st.name + ".proj", kConv1));
  }
};

}  // namespace

std::vector<ParamSpec> declare_model_params(const ModelConfig& config) {
  config.validate();
  std::vector<ParamSpec> out;
  declare_condition_params(config, out);
  const int C = config.base_channels;
  linear_spec(out, "unet/temb.dense0", C, config.time_embed_dim);
  linear_spec(out, "unet/temb.dense1", config.time_embed_dim, config.time_embed_dim);
  const int in_ch = config.conditioning == Conditioning::ConcatLdr ? 3 + 18 : 3;
  conv_spec(out, "unet/conv_in", 1, in_ch, C);
  if (config.conditioning == Conditioning::ConcatAligned) conv_spec(out, "unet/cond_fuse", 1, C + config.features(), C);
  for (const Stage& st : body_stages(config)) declare_stage(out, st, config);
  norm_spec(out, "unet/out.norm", C);
  conv_spec(out, "unet/out.conv", 3, C, 3, true, Init::Zero);
  return out;
}

std::int64_t parameter_count(const ModelConfig& config) {
  std::int64_t n = 0;
  for (const ParamSpec& s : declare_model_params(config)) n += s.numel();
  return n;
}

template <typename Scalar>
ad::Var encode_condition(ad::Graph<Scalar>& g, const std::array<ad::Var, 3>& y, const ParamStore<Scalar>& params,
                         const ModelConfig& config) {
  if (config.conditioning == Conditioning::ConcatLdr) return ad::concat(g, {y[0], y[1], y[2]});
  return attention_align(g, y, params);
}

template <typename Scalar>
ConditionFeatures<Scalar> encode_condition(const ConditionInput<Scalar>& input, const ParamStore<Scalar>& params,
                                           const ModelConfig& config) {
  ad::Graph<Scalar> g(false);
  std::array<ad::Var, 3> y;
  for (int i = 0; i < 3; ++i) y[i] = g.constant(input.frames[i]);
  return {g.tensor(encode_condition(g, y, params, config))};
}

template <typename Scalar>
ad::Var predict_noise(ad::Graph<Scalar>& g, ad::Var x_t, int t, ad::Var cond, const ParamStore<Scalar>& params,
                      const ModelConfig& config) {
  const int H = g.height(x_t), W = g.width(x_t);
  const int div = config.spatial_divisor();
  if (g.channels(x_t) != 3) throw ShapeMismatch("predict_noise: x_t must have 3 channels");
  if (H % div != 0 || W % div != 0)
    throw ShapeMismatch("predict_noise: spatial dims " + std::to_string(H) + "x" + std::to_string(W) +
                        " not divisible by " + std::to_string(div));
  if (g.height(cond) != H || g.width(cond) != W) throw ShapeMismatch("predict_noise: condition dims differ from x_t");

  Net<Scalar> net{g, params};

  const std::vector<double> sin_emb = time_embedding(t, config.base_channels);
  Tensor<Scalar> temb0(1, 1, config.base_channels);
  for (int i = 0; i < config.base_channels; ++i) temb0.data(0, i) = Scalar(sin_emb[i]);
  ad::Var temb = net.conv(g.constant(std::move(temb0)), "unet/temb.dense0", kConv1);
  temb = net.conv(ad::silu(g, temb), "unet/temb.dense1", kConv1);
  const ad::Var temb_act = ad::silu(g, temb);

  ad::Var h;
  switch (config.conditioning) {
    case Conditioning::Dfa: {
      const ad::Var f = net.conv(x_t, "unet/conv_in", kConv1);
      auto [eta, gamma] = dfa_params(g, cond, params);
      h = dfa_apply(g, f, eta, gamma);
      break;
    }
    case Conditioning::ConcatAligned: {
      const ad::Var f = net.conv(x_t, "unet/conv_in", kConv1);
      h = net.conv(ad::concat(g, {f, cond}), "unet/cond_fuse", kConv1);
      break;
    }
    case Conditioning::ConcatLdr:
      h = net.conv(ad::concat(g, {x_t, cond}), "unet/conv_in", kConv1);
      break;
  }

  std::vector<ad::Var> skips;
  for (const Stage& st : body_stages(config)) {
    switch (st.kind) {
      case Stage::Res:
        h = net.res_block(h, temb_act, st);
        break;
      case Stage::Attn:
        h = net.attention(h, st);
        break;
      case Stage::Down:
        h = net.conv(h, st.name, kDown);
        break;
      case Stage::Up:
        h = net.conv(ad::upsample2x(g, h), st.name, kConv3);
        break;
      case Stage::Push:
        skips.push_back(h);
        break;
      case Stage::PopConcat:
        h = ad::concat(g, {h, skips.back()});
        skips.pop_back();
        break;
    }
  }
  h = ad::silu(g, net.norm(h, "unet/out.norm"));
  return net.conv(h, "unet/out.conv", kConv3);
}

template <typename Scalar>
Tensor<Scalar> predict_noise(const Tensor<Scalar>& x_t, int t, const ConditionFeatures<Scalar>& cond,
                             const ParamStore<Scalar>& params, const ModelConfig& config) {
  ad::Graph<Scalar> g(false);
  const ad::Var x = g.constant(x_t);
  const ad::Var c = g.constant(cond.x_tilde);
  return g.tensor(predict_noise(g, x, t, c, params, config));
}

#define HDRDIFF_INSTANTIATE(S)                                                                                    \
  template ad::Var encode_condition<S>(ad::Graph<S>&, const std::array<ad::Var, 3>&, const ParamStore<S>&,      \
                                       const ModelConfig&);                                                     \
  template ConditionFeatures<S> encode_condition<S>(const ConditionInput<S>&, const ParamStore<S>&,             \
                                                    const ModelConfig&);                                        \
  template ad::Var predict_noise<S>(ad::Graph<S>&, ad::Var, int, ad::Var, const ParamStore<S>&,                 \
                                    const ModelConfig&);                                                        \
  template Tensor<S> predict_noise<S>(const Tensor<S>&, int, const ConditionFeatures<S>&, const ParamStore<S>&, \
                                      const ModelConfig&);

HDRDIFF_INSTANTIATE(float)
HDRDIFF_INSTANTIATE(double)
#undef HDRDIFF_INSTANTIATE

}  // namespace hdrdiff
