// Copyright 2026 The hdrdiff Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef HDRDIFF_DATASET_HPP
#define HDRDIFF_DATASET_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hdrdiff/tensor.hpp"
#include "hdrdiff/tonemap.hpp"

// Scene directory layout:
//
//   ldr*.png | ldr*.hdrf   three frames; lexicographic order = ascending exposure
//   exposures.txt          one EV stop per line, three lines
//   gt.hdrf                optional linear HDR ground truth in [0, 1]
//
// PNG frames must be 8-bit; HDRF frames hold one (H, W, 3) tensor in [0, 1].

namespace hdrdiff {

struct SampleRecord {
  LdrSample<float> ldr;
  std::optional<Tensor<float>> gt_hdr;
  std::string scene_id;
};

struct SynthOptions {
  int size = 64;
  int motion_px = 4;
  double sat_frac = 0.15;
  double gamma = kDefaultGamma;
};

/// Procedural scene: smooth gradient background plus rectangles and disks
/// with log-uniform radiance, rendered at EV {-2, 0, +2} as 8-bit LDRs.
/// Non-reference frames are globally shifted by up to motion_px pixels.
/// Bright shapes are added until at least sat_frac of the high-exposure
/// frame's pixels are saturated in every channel.
SampleRecord synth_scene(std::uint64_t seed, const SynthOptions& options);

/// Renders clip(gt * 2^ev, 0, 1)^(1 / gamma), quantized to 8 bits.
Tensor<float> render_ldr(const Tensor<float>& gt, double ev, double gamma);

/// Integer translation with edge clamping: out(y, x) = in(y - dy, x - dx).
Tensor<float> translate(const Tensor<float>& in, int dy, int dx);

/// Exposures 2^ev normalized so the middle frame is 1.
std::array<double, 3> exposures_from_ev(const std::array<double, 3>& ev);

SampleRecord load_dataset_sample(const std::filesystem::path& dir, double gamma = kDefaultGamma);

/// Writes a record in the directory layout above (PNG frames, EVs -2/0/+2
/// recovered from the exposures).
void save_dataset_sample(const std::filesystem::path& dir, const SampleRecord& record);

/// Scene subdirectories of root, sorted by name.
std::vector<std::filesystem::path> list_scenes(const std::filesystem::path& root);

/// 8-bit RGB PNG I/O; values in [0, 1].
Tensor<float> read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Tensor<float>& image);

}  // namespace hdrdiff

#endif  // HDRDIFF_DATASET_HPP
