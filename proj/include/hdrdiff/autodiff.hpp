// Copyright 2026 The hdrdiff Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef HDRDIFF_AUTODIFF_HPP
#define HDRDIFF_AUTODIFF_HPP

#include <cmath>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "hdrdiff/tensor.hpp"

// Minimal tape-based reverse-mode differentiation over feature maps.
//
// Every node holds an (H*W) x C matrix in the same layout as Tensor. Ops are
// free functions that evaluate eagerly and, when the graph is recording,
// append a closure that propagates the node's gradient to its parents.
// Parameters are leaves that reference external storage.

namespace hdrdiff::ad {

struct Var {
  int id = -1;
};

enum class Padding { Zero, Reflect };

struct ConvSpec {
  int kernel = 3;
  int stride = 1;
  Padding padding = Padding::Zero;
};

template <typename Scalar>
class Graph {
 public:
  using Mat = Matrix<Scalar>;
  using Backward = std::function<void(Graph&, int self)>;

  struct Node {
    int height = 1;
    int width = 1;
    Mat own;
    const Mat* external = nullptr;
    Mat grad;
    bool requires_grad = false;
    Backward backward;
    std::string param_name;

    const Mat& value() const { return external ? *external : own; }
  };

  /// A non-recording graph only evaluates; no closures or caches are kept.
  explicit Graph(bool record = true) : record_(record) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool recording() const { return record_; }

  Var constant(Tensor<Scalar> t) {
    Node n;
    n.height = t.height;
    n.width = t.width;
    n.own = std::move(t.data);
    return append(std::move(n));
  }

  /// Leaf bound to externally owned storage; repeated names share one leaf.
  Var parameter(const std::string& name, const Mat& value) {
    if (auto it = params_.find(name); it != params_.end()) return it->second;
    Node n;
    n.height = static_cast<int>(value.rows());
    n.width = 1;
    n.external = &value;
    n.requires_grad = record_;
    n.param_name = name;
    Var v = append(std::move(n));
    params_.emplace(name, v);
    return v;
  }

  Var push(int h, int w, Mat value, bool requires_grad, Backward bw) {
    Node n;
    n.height = h;
    n.width = w;
    n.own = std::move(value);
    n.requires_grad = record_ && requires_grad;
    if (n.requires_grad) n.backward = std::move(bw);
    return append(std::move(n));
  }

  const Node& node(Var v) const { return nodes_.at(v.id); }
  const Mat& value(Var v) const { return nodes_.at(v.id).value(); }
  int height(Var v) const { return nodes_.at(v.id).height; }
  int width(Var v) const { return nodes_.at(v.id).width; }
  int channels(Var v) const { return static_cast<int>(value(v).cols()); }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }

  Tensor<Scalar> tensor(Var v) const {
    const Node& n = nodes_.at(v.id);
    return Tensor<Scalar>(n.height, n.width, n.value());
  }

  /// Gradient buffer of v, zero-allocated on first access.
  Mat& grad(Var v) {
    Node& n = nodes_.at(v.id);
    if (n.grad.size() == 0) n.grad = Mat::Zero(n.value().rows(), n.value().cols());
    return n.grad;
  }
  Mat& grad(int id) { return grad(Var{id}); }

  /// Back-propagates from a 1x1 node with seed gradient 1.
  void backward(Var loss) {
    if (!record_) throw Error("backward on a non-recording graph");
    if (value(loss).size() != 1) throw ShapeMismatch("backward: loss must be a scalar node");
    grad(loss)(0, 0) += Scalar(1);
    for (int id = loss.id; id >= 0; --id) {
      Node& n = nodes_[id];
      if (!n.requires_grad || !n.backward || n.grad.size() == 0) continue;
      n.backward(*this, id);
    }
  }

  /// Calls f(name, grad) for every parameter leaf that received a gradient.
  template <typename F>
  void for_each_parameter_grad(F&& f) const {
    for (const auto& [name, v] : params_) {
      const Node& n = nodes_[v.id];
      if (n.grad.size() != 0) f(name, n.grad);
    }
  }

 private:
  Var append(Node n) {
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  bool record_;
  std::deque<Node> nodes_;
  std::map<std::string, Var> params_;
};

namespace detail {

inline int reflect(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

/// Source index per output coordinate along one axis for one kernel tap;
/// -1 marks zero padding.
inline std::vector<int> tap_map(int in, int out, int tap, const ConvSpec& s) {
  const int pad = s.kernel / 2;
  std::vector<int> m(out);
  for (int o = 0; o < out; ++o) {
    int i = o * s.stride + tap - pad;
    if (i < 0 || i >= in) i = s.padding == Padding::Reflect ? reflect(i, in) : -1;
    m[o] = i;
  }
  return m;
}

inline int conv_out(int in, const ConvSpec& s) { return (in + 2 * (s.kernel / 2) - s.kernel) / s.stride + 1; }

template <typename Scalar>
Matrix<Scalar> im2col(const Matrix<Scalar>& x, int h, int w, const ConvSpec& s) {
  const int cin = static_cast<int>(x.cols());
  const int oh = conv_out(h, s), ow = conv_out(w, s);
  Matrix<Scalar> col(Eigen::Index(oh) * ow, Eigen::Index(s.kernel) * s.kernel * cin);
  for (int ky = 0; ky < s.kernel; ++ky) {
    const std::vector<int> ym = tap_map(h, oh, ky, s);
    for (int kx = 0; kx < s.kernel; ++kx) {
      const std::vector<int> xm = tap_map(w, ow, kx, s);
      for (int ci = 0; ci < cin; ++ci) {
        Scalar* dst = col.col((Eigen::Index(ky) * s.kernel + kx) * cin + ci).data();
        const Scalar* src = x.col(ci).data();
        for (int oy = 0; oy < oh; ++oy) {
          Scalar* row = dst + Eigen::Index(oy) * ow;
          if (ym[oy] < 0) {
            std::fill(row, row + ow, Scalar(0));
            continue;
          }
          const Scalar* srow = src + Eigen::Index(ym[oy]) * w;
          for (int ox = 0; ox < ow; ++ox) row[ox] = xm[ox] < 0 ? Scalar(0) : srow[xm[ox]];
        }
      }
    }
  }
  return col;
}

template <typename Scalar>
void col2im_add(const Matrix<Scalar>& col, int h, int w, const ConvSpec& s, Matrix<Scalar>& dx) {
  const int cin = static_cast<int>(dx.cols());
  const int oh = conv_out(h, s), ow = conv_out(w, s);
  for (int ky = 0; ky < s.kernel; ++ky) {
    const std::vector<int> ym = tap_map(h, oh, ky, s);
    for (int kx = 0; kx < s.kernel; ++kx) {
      const std::vector<int> xm = tap_map(w, ow, kx, s);
      for (int ci = 0; ci < cin; ++ci) {
        const Scalar* src = col.col((Eigen::Index(ky) * s.kernel + kx) * cin + ci).data();
        Scalar* dst = dx.col(ci).data();
        for (int oy = 0; oy < oh; ++oy) {
          if (ym[oy] < 0) continue;
          const Scalar* row = src + Eigen::Index(oy) * ow;
          Scalar* drow = dst + Eigen::Index(ym[oy]) * w;
          for (int ox = 0; ox < ow; ++ox)
            if (xm[ox] >= 0) drow[xm[ox]] += row[ox];
        }
      }
    }
  }
}

template <typename Scalar>
void check_same(const Graph<Scalar>& g, Var a, Var b, const char* where) {
  if (g.value(a).rows() != g.value(b).rows() || g.value(a).cols() != g.value(b).cols())
    throw ShapeMismatch(std::string(where) + ": operand shapes differ");
}

}  // namespace detail

/// 2-D convolution. w is (k*k*cin) x cout with row index (ky*k + kx)*cin + ci;
/// b is 1 x cout. Pass an invalid Var for no bias.
template <typename Scalar>
Var conv2d(Graph<Scalar>& g, Var x, Var w, Var b, const ConvSpec& spec) {
  using Mat = Matrix<Scalar>;
  const int h = g.height(x), wd = g.width(x);
  const int cin = g.channels(x);
  const Mat& W = g.value(w);
  if (W.rows() != Eigen::Index(spec.kernel) * spec.kernel * cin)
    throw ShapeMismatch("conv2d: weight rows " + std::to_string(W.rows()) + " do not match kernel " +
                        std::to_string(spec.kernel) + " and " + std::to_string(cin) + " input channels");
  const int oh = detail::conv_out(h, spec), ow = detail::conv_out(wd, spec);
  const bool pointwise = spec.kernel == 1 && spec.stride == 1;
  const bool want_grad = g.recording() && (g.requires_grad(x) || g.requires_grad(w) ||
                                           (b.id >= 0 && g.requires_grad(b)));
  std::shared_ptr<Mat> col;
  if (!pointwise) col = std::make_shared<Mat>(detail::im2col(g.value(x), h, wd, spec));
  Mat out(Eigen::Index(oh) * ow, W.cols());
  out.noalias() = (pointwise ? g.value(x) : *col) * W;
  if (b.id >= 0) {
    if (g.value(b).cols() != W.cols()) throw ShapeMismatch("conv2d: bias width mismatch");
    out.rowwise() += g.value(b).row(0);
  }
  if (!want_grad) col.reset();
  return g.push(oh, ow, std::move(out), want_grad, [x, w, b, spec, h, wd, col, pointwise](Graph<Scalar>& g, int self) {
    const Mat& dout = g.grad(self);
    const Mat& in = pointwise ? g.value(x) : *col;
    if (g.requires_grad(w)) g.grad(w).noalias() += in.transpose() * dout;
    if (b.id >= 0 && g.requires_grad(b)) g.grad(b) += dout.colwise().sum();
    if (g.requires_grad(x)) {
      if (pointwise) {
        g.grad(x).noalias() += dout * g.value(w).transpose();
      } else {
        Mat dcol = dout * g.value(w).transpose();
        detail::col2im_add(dcol, h, wd, spec, g.grad(x));
      }
    }
  });
}

template <typename Scalar>
Var add(Graph<Scalar>& g, Var a, Var b) {
  detail::check_same(g, a, b, "add");
  Matrix<Scalar> v = g.value(a) + g.value(b);
  return g.push(g.height(a), g.width(a), std::move(v), g.requires_grad(a) || g.requires_grad(b),
                [a, b](Graph<Scalar>& g, int self) {
                  if (g.requires_grad(a)) g.grad(a) += g.grad(self);
                  if (g.requires_grad(b)) g.grad(b) += g.grad(self);
                });
}

template <typename Scalar>
Var sub(Graph<Scalar>& g, Var a, Var b) {
  detail::check_same(g, a, b, "sub");
  Matrix<Scalar> v = g.value(a) - g.value(b);
  return g.push(g.height(a), g.width(a), std::move(v), g.requires_grad(a) || g.requires_grad(b),
                [a, b](Graph<Scalar>& g, int self) {
                  if (g.requires_grad(a)) g.grad(a) += g.grad(self);
                  if (g.requires_grad(b)) g.grad(b) -= g.grad(self);
                });
}

/// Elementwise product.
template <typename Scalar>
Var mul(Graph<Scalar>& g, Var a, Var b) {
  detail::check_same(g, a, b, "mul");
  Matrix<Scalar> v = g.value(a).cwiseProduct(g.value(b));
  return g.push(g.height(a), g.width(a), std::move(v), g.requires_grad(a) || g.requires_grad(b),
                [a, b](Graph<Scalar>& g, int self) {
                  const auto& d = g.grad(self);
                  if (g.requires_grad(a)) g.grad(a) += d.cwiseProduct(g.value(b));
                  if (g.requires_grad(b)) g.grad(b) += d.cwiseProduct(g.value(a));
                });
}

template <typename Scalar>
Var scale(Graph<Scalar>& g, Var a, Scalar s) {
  Matrix<Scalar> v = g.value(a) * s;
  return g.push(g.height(a), g.width(a), std::move(v), g.requires_grad(a), [a, s](Graph<Scalar>& g, int self) {
    g.grad(a) += g.grad(self) * s;
  });
}

/// x + v with v (1 x C) broadcast over every pixel.
template <typename Scalar>
Var add_channels(Graph<Scalar>& g, Var x, Var v) {
  if (g.value(v).rows() != 1 || g.value(v).cols() != g.value(x).cols())
    throw ShapeMismatch("add_channels: expected a 1 x C row");
  Matrix<Scalar> out = g.value(x);
  out.rowwise() += g.value(v).row(0);
  return g.push(g.height(x), g.width(x), std::move(out), g.requires_grad(x) || g.requires_grad(v),
                [x, v](Graph<Scalar>& g, int self) {
                  if (g.requires_grad(x)) g.grad(x) += g.grad(self);
                  if (g.requires_grad(v)) g.grad(v) += g.grad(self).colwise().sum();
                });
}

template <typename Scalar>
Var silu(Graph<Scalar>& g, Var x) {
  const auto& in = g.value(x);
  Matrix<Scalar> out = in.unaryExpr([](Scalar v) { return v / (Scalar(1) + std::exp(-v)); });
  return g.push(g.height(x), g.width(x), std::move(out), g.requires_grad(x), [x](Graph<Scalar>& g, int self) {
    const auto& in = g.value(x);
    g.grad(x) += g.grad(self).binaryExpr(in, [](Scalar d, Scalar v) {
      const Scalar s = Scalar(1) / (Scalar(1) + std::exp(-v));
      return d * s * (Scalar(1) + v * (Scalar(1) - s));
    });
  });
}

template <typename Scalar>
Var relu(Graph<Scalar>& g, Var x) {
  Matrix<Scalar> out = g.value(x).cwiseMax(Scalar(0));
  return g.push(g.height(x), g.width(x), std::move(out), g.requires_grad(x), [x](Graph<Scalar>& g, int self) {
    g.grad(x) += g.grad(self).binaryExpr(g.value(x), [](Scalar d, Scalar v) { return v > 0 ? d : Scalar(0); });
  });
}

template <typename Scalar>
Var sigmoid(Graph<Scalar>& g, Var x) {
  Matrix<Scalar> out = g.value(x).unaryExpr([](Scalar v) { return Scalar(1) / (Scalar(1) + std::exp(-v)); });
  return g.push(g.height(x), g.width(x), std::move(out), g.requires_grad(x), [x](Graph<Scalar>& g, int self) {
    const auto& y = g.value(Var{self});
    g.grad(x) += g.grad(self).cwiseProduct(y.cwiseProduct((Scalar(1) - y.array()).matrix()));
  });
}

/// Group normalization with per-channel affine gamma, beta (both 1 x C).
template <typename Scalar>
Var group_norm(Graph<Scalar>& g, Var x, Var gamma, Var beta, int groups, Scalar eps = Scalar(1e-5)) {
  using Mat = Matrix<Scalar>;
  const Mat& in = g.value(x);
  const int C = static_cast<int>(in.cols());
  if (groups <= 0 || C % groups != 0) throw ShapeMismatch("group_norm: channels not divisible by groups");
  const int cg = C / groups;
  const Eigen::Index n = in.rows() * cg;
  auto xhat = std::make_shared<Mat>(in.rows(), C);
  auto inv_std = std::make_shared<std::vector<Scalar>>(groups);
  for (int k = 0; k < groups; ++k) {
    auto blk = in.middleCols(k * cg, cg);
    const Scalar mean = blk.sum() / Scalar(n);
    const Scalar var = (blk.array() - mean).square().sum() / Scalar(n);
    const Scalar is = Scalar(1) / std::sqrt(var + eps);
    (*inv_std)[k] = is;
    xhat->middleCols(k * cg, cg) = ((blk.array() - mean) * is).matrix();
  }
  Mat out = *xhat;
  out.array().rowwise() *= g.value(gamma).row(0).array();
  out.rowwise() += g.value(beta).row(0);
  const bool rg = g.requires_grad(x) || g.requires_grad(gamma) || g.requires_grad(beta);
  return g.push(g.height(x), g.width(x), std::move(out), rg,
                [x, gamma, beta, groups, cg, n, xhat, inv_std](Graph<Scalar>& g, int self) {
                  const Mat& dy = g.grad(self);
                  if (g.requires_grad(gamma)) g.grad(gamma) += dy.cwiseProduct(*xhat).colwise().sum();
                  if (g.requires_grad(beta)) g.grad(beta) += dy.colwise().sum();
                  if (!g.requires_grad(x)) return;
                  Mat dxhat = dy;
                  dxhat.array().rowwise() *= g.value(gamma).row(0).array();
                  Mat& dx = g.grad(x);
                  for (int k = 0; k < groups; ++k) {
                    auto dh = dxhat.middleCols(k * cg, cg).array();
                    auto xh = xhat->middleCols(k * cg, cg).array();
                    const Scalar s1 = dh.sum();
                    const Scalar s2 = (dh * xh).sum();
                    dx.middleCols(k * cg, cg).array() +=
                        ((*inv_std)[k] / Scalar(n)) * (Scalar(n) * dh - s1 - xh * s2);
                  }
                });
}

/// Channel-wise concatenation.
template <typename Scalar>
Var concat(Graph<Scalar>& g, const std::vector<Var>& parts) {
  Eigen::Index cols = 0;
  bool rg = false;
  for (Var p : parts) {
    if (g.value(p).rows() != g.value(parts[0]).rows()) throw ShapeMismatch("concat: pixel counts differ");
    cols += g.value(p).cols();
    rg = rg || g.requires_grad(p);
  }
  Matrix<Scalar> out(g.value(parts[0]).rows(), cols);
  Eigen::Index at = 0;
  for (Var p : parts) {
    out.middleCols(at, g.value(p).cols()) = g.value(p);
    at += g.value(p).cols();
  }
  return g.push(g.height(parts[0]), g.width(parts[0]), std::move(out), rg, [parts](Graph<Scalar>& g, int self) {
    Eigen::Index at = 0;
    for (Var p : parts) {
      const Eigen::Index c = g.value(p).cols();
      if (g.requires_grad(p)) g.grad(p) += g.grad(self).middleCols(at, c);
      at += c;
    }
  });
}

template <typename Scalar>
Var slice_channels(Graph<Scalar>& g, Var x, int start, int count) {
  if (start < 0 || count <= 0 || start + count > g.channels(x)) throw ShapeMismatch("slice_channels: range");
  Matrix<Scalar> out = g.value(x).middleCols(start, count);
  return g.push(g.height(x), g.width(x), std::move(out), g.requires_grad(x),
                [x, start, count](Graph<Scalar>& g, int self) {
                  g.grad(x).middleCols(start, count) += g.grad(self);
                });
}

/// Nearest-neighbour 2x upsampling.
template <typename Scalar>
Var upsample2x(Graph<Scalar>& g, Var x) {
  const int h = g.height(x), w = g.width(x);
  const auto& in = g.value(x);
  Matrix<Scalar> out(Eigen::Index(4) * h * w, in.cols());
  for (Eigen::Index c = 0; c < in.cols(); ++c)
    for (int y = 0; y < 2 * h; ++y)
      for (int xx = 0; xx < 2 * w; ++xx) out(Eigen::Index(y) * 2 * w + xx, c) = in(Eigen::Index(y / 2) * w + xx / 2, c);
  return g.push(2 * h, 2 * w, std::move(out), g.requires_grad(x), [x, h, w](Graph<Scalar>& g, int self) {
    const auto& d = g.grad(self);
    auto& dx = g.grad(x);
    for (Eigen::Index c = 0; c < d.cols(); ++c)
      for (int y = 0; y < 2 * h; ++y)
        for (int xx = 0; xx < 2 * w; ++xx) dx(Eigen::Index(y / 2) * w + xx / 2, c) += d(Eigen::Index(y) * 2 * w + xx, c);
  });
}

/// softmax(q k^T / sqrt(C)) v over the pixels of one feature map.
template <typename Scalar>
Var dot_product_attention(Graph<Scalar>& g, Var q, Var k, Var v) {
  using Mat = Matrix<Scalar>;
  detail::check_same(g, q, k, "attention");
  detail::check_same(g, q, v, "attention");
  const Scalar s = Scalar(1) / std::sqrt(Scalar(g.channels(q)));
  auto P = std::make_shared<Mat>(g.value(q) * g.value(k).transpose() * s);
  for (Eigen::Index r = 0; r < P->rows(); ++r) {
    const Scalar m = P->row(r).maxCoeff();
    P->row(r) = (P->row(r).array() - m).exp().matrix();
    P->row(r) /= P->row(r).sum();
  }
  Mat out = *P * g.value(v);
  const bool rg = g.requires_grad(q) || g.requires_grad(k) || g.requires_grad(v);
  return g.push(g.height(q), g.width(q), std::move(out), rg, [q, k, v, s, P](Graph<Scalar>& g, int self) {
    const Mat& dO = g.grad(self);
    if (g.requires_grad(v)) g.grad(v).noalias() += P->transpose() * dO;
    Mat dP = dO * g.value(v).transpose();
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> dot = P->cwiseProduct(dP).rowwise().sum();
    Mat dS = P->cwiseProduct((dP.colwise() - dot));
    if (g.requires_grad(q)) g.grad(q).noalias() += dS * g.value(k) * s;
    if (g.requires_grad(k)) g.grad(k).noalias() += dS.transpose() * g.value(q) * s;
  });
}

/// Mean of squared entries, as a 1x1 node.
template <typename Scalar>
Var mean_square(Graph<Scalar>& g, Var x) {
  const Scalar n = Scalar(g.value(x).size());
  Matrix<Scalar> out(1, 1);
  out(0, 0) = g.value(x).squaredNorm() / n;
  return g.push(1, 1, std::move(out), g.requires_grad(x), [x, n](Graph<Scalar>& g, int self) {
    g.grad(x) += g.value(x) * (Scalar(2) * g.grad(self)(0, 0) / n);
  });
}

/// Mean of absolute entries, as a 1x1 node.
template <typename Scalar>
Var mean_abs(Graph<Scalar>& g, Var x) {
  const Scalar n = Scalar(g.value(x).size());
  Matrix<Scalar> out(1, 1);
  out(0, 0) = g.value(x).cwiseAbs().sum() / n;
  return g.push(1, 1, std::move(out), g.requires_grad(x), [x, n](Graph<Scalar>& g, int self) {
    const Scalar d = g.grad(self)(0, 0) / n;
    g.grad(x) += g.value(x).unaryExpr([d](Scalar v) { return v > 0 ? d : (v < 0 ? -d : Scalar(0)); });
  });
}

}  // namespace hdrdiff::ad

#endif  // HDRDIFF_AUTODIFF_HPP
