// Copyright 2026 The hdrdiff Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef HDRDIFF_TENSOR_HPP
#define HDRDIFF_TENSOR_HPP

#include <Eigen/Dense>

#include <string>

#include "hdrdiff/errors.hpp"

namespace hdrdiff {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Dense (H, W, C) image or feature map.
///
/// Storage is a column-major (H*W) x C matrix: pixel (y, x) is row y*W + x and
/// every channel plane is contiguous. Convolutions map onto a single GEMM in
/// this layout.
template <typename Scalar>
struct Tensor {
  int height = 0;
  int width = 0;
  Matrix<Scalar> data;

  Tensor() = default;
  Tensor(int h, int w, int c) : height(h), width(w), data(Matrix<Scalar>::Zero(Eigen::Index(h) * w, c)) {}
  Tensor(int h, int w, Matrix<Scalar> m) : height(h), width(w), data(std::move(m)) {}

  static Tensor constant(int h, int w, int c, Scalar v) {
    Tensor t(h, w, c);
    t.data.setConstant(v);
    return t;
  }

  int channels() const { return static_cast<int>(data.cols()); }
  Eigen::Index pixels() const { return Eigen::Index(height) * width; }
  Eigen::Index size() const { return data.size(); }

  Scalar& operator()(int y, int x, int c) { return data(Eigen::Index(y) * width + x, c); }
  Scalar operator()(int y, int x, int c) const { return data(Eigen::Index(y) * width + x, c); }

  bool same_shape(const Tensor& o) const {
    return height == o.height && width == o.width && channels() == o.channels();
  }

  template <typename Other>
  Tensor<Other> cast() const {
    return Tensor<Other>(height, width, data.template cast<Other>());
  }

  /// Copy of the h x w window whose top-left corner is (row, col).
  Tensor crop(int row, int col, int h, int w) const {
    Tensor out(h, w, channels());
    for (int c = 0; c < channels(); ++c)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out(y, x, c) = (*this)(row + y, col + x, c);
    return out;
  }
};

template <typename Scalar>
std::string shape_string(const Tensor<Scalar>& t) {
  return "(" + std::to_string(t.height) + ", " + std::to_string(t.width) + ", " +
         std::to_string(t.channels()) + ")";
}

template <typename Scalar>
void require_same_shape(const Tensor<Scalar>& a, const Tensor<Scalar>& b, const char* where) {
  if (!a.same_shape(b))
    throw ShapeMismatch(std::string(where) + ": shape " + shape_string(a) + " vs " + shape_string(b));
}

template <typename Scalar>
bool all_finite(const Tensor<Scalar>& t) {
  return t.data.allFinite();
}

/// Concatenates tensors along the channel axis.
template <typename Scalar>
Tensor<Scalar> concat_channels(std::initializer_list<const Tensor<Scalar>*> parts) {
  const Tensor<Scalar>& first = **parts.begin();
  int total = 0;
  for (const auto* p : parts) {
    if (p->height != first.height || p->width != first.width)
      throw ShapeMismatch("concat_channels: spatial dims differ");
    total += p->channels();
  }
  Tensor<Scalar> out(first.height, first.width, total);
  int at = 0;
  for (const auto* p : parts) {
    out.data.middleCols(at, p->channels()) = p->data;
    at += p->channels();
  }
  return out;
}

}  // namespace hdrdiff

#endif  // HDRDIFF_TENSOR_HPP
