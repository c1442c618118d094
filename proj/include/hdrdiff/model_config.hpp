// Copyright 2026 The hdrdiff Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef HDRDIFF_MODEL_CONFIG_HPP
#define HDRDIFF_MODEL_CONFIG_HPP

#include <algorithm>
#include <set>
#include <string>
#include <vector>

namespace hdrdiff {

/// How LDR information enters the noise predictor.
enum class Conditioning {
  Dfa,            ///< aligned features -> (eta, gamma) modulation of the input features
  ConcatAligned,  ///< aligned features concatenated with the input features, fused by a 1x1 conv
  ConcatLdr,      ///< raw 6-channel LDR tensors concatenated with x_t, no alignment
};

std::string to_string(Conditioning c);
Conditioning parse_conditioning(const std::string& s);

/// Architecture of the condition generator and the noise predictor.
struct ModelConfig {
  int base_channels = 32;
  std::vector<int> channel_multipliers{1, 2, 4};
  int res_blocks = 1;
  int time_embed_dim = 128;
  /// Resolution levels (0 = full) whose residual blocks carry self-attention.
  /// The bottleneck always has one attention block.
  std::set<int> attn_levels;
  /// Width of the aligned condition features; 0 means base_channels.
  int cond_features = 0;
  Conditioning conditioning = Conditioning::Dfa;

  int levels() const { return static_cast<int>(channel_multipliers.size()); }
  int features() const { return cond_features > 0 ? cond_features : base_channels; }
  /// Spatial dims of predictor inputs must be multiples of this.
  int spatial_divisor() const { return 1 << (levels() - 1); }

  /// Throws InvalidArgument on an unusable configuration.
  void validate() const;

  /// Desk-scale default.
  static ModelConfig toy() { return ModelConfig{}; }
  /// Full-scale configuration (base 128, multipliers {1,1,2,2,4,4}, embedding 512).
  static ModelConfig full_scale() {
    ModelConfig c;
    c.base_channels = 128;
    c.channel_multipliers = {1, 1, 2, 2, 4, 4};
    c.res_blocks = 1;
    c.time_embed_dim = 512;
    return c;
  }
};

/// Group count for group normalization: the largest divisor of channels not
/// above min(8, channels / 2). Groups of one channel would cancel the
/// per-channel time-embedding offset of residual blocks.
inline int norm_groups(int channels) {
  int g = std::max(1, std::min(8, channels / 2));
  while (channels % g != 0) --g;
  return g;
}

}  // namespace hdrdiff

#endif  // HDRDIFF_MODEL_CONFIG_HPP
