// Copyright 2026 The hdrdiff Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef HDRDIFF_TENSOR_IO_HPP
#define HDRDIFF_TENSOR_IO_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hdrdiff/params.hpp"
#include "hdrdiff/tensor.hpp"
#include "hdrdiff/trainer.hpp"

// HDRF container, all integers little-endian:
//
//   "HDRF" | u16 version | u32 count
//   count x ( u16 name_len | name bytes | u8 ndim | ndim x u32 dim | f32 data, row-major )

namespace hdrdiff {

inline constexpr std::uint16_t kHdrfVersion = 1;

struct NamedTensor {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  std::uint64_t numel() const;
};

std::vector<char> encode_tensors(const std::vector<NamedTensor>& tensors);
/// `source` names the origin in error messages.
std::vector<NamedTensor> decode_tensors(const std::vector<char>& bytes, const std::string& source = "<memory>");

void write_tensors(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_tensors(const std::filesystem::path& path);

/// (H, W, C) image tensor.
template <typename Scalar>
NamedTensor to_named(const std::string& name, const Tensor<Scalar>& t) {
  NamedTensor n{name,
                {static_cast<std::uint32_t>(t.height), static_cast<std::uint32_t>(t.width),
                 static_cast<std::uint32_t>(t.channels())},
                std::vector<float>(static_cast<std::size_t>(t.size()))};
  const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = t.data.template cast<float>();
  std::copy(rm.data(), rm.data() + rm.size(), n.data.begin());
  return n;
}

template <typename Scalar>
Tensor<Scalar> from_named(const NamedTensor& n) {
  if (n.dims.size() != 3) throw LoadError("tensor '" + n.name + "' is not (H, W, C)");
  const int h = static_cast<int>(n.dims[0]), w = static_cast<int>(n.dims[1]), c = static_cast<int>(n.dims[2]);
  Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(
      n.data.data(), Eigen::Index(h) * w, c);
  return Tensor<Scalar>(h, w, m.template cast<Scalar>());
}

/// First tensor of an image file, as (H, W, C).
template <typename Scalar>
Tensor<Scalar> read_image_tensor(const std::filesystem::path& path) {
  const std::vector<NamedTensor> ts = read_tensors(path);
  if (ts.empty()) throw LoadError(path.string() + ": contains no tensors");
  return from_named<Scalar>(ts.front());
}

template <typename Scalar>
void write_image_tensor(const std::filesystem::path& path, const Tensor<Scalar>& t, const std::string& name = "image") {
  write_tensors(path, {to_named(name, t)});
}

/// Parameters, EMA shadows, Adam moments, iteration count and the run
/// configuration text that produced them.
template <typename Scalar>
struct Checkpoint {
  TrainState<Scalar> state;
  std::string config_text;
};

template <typename Scalar>
std::vector<NamedTensor> checkpoint_tensors(const TrainState<Scalar>& state, const std::string& config_text);

template <typename Scalar>
void save_checkpoint(const std::filesystem::path& path, const TrainState<Scalar>& state,
                     const std::string& config_text) {
  write_tensors(path, checkpoint_tensors(state, config_text));
}

template <typename Scalar>
Checkpoint<Scalar> load_checkpoint(const std::filesystem::path& path);

}  // namespace hdrdiff

#endif  // HDRDIFF_TENSOR_IO_HPP
