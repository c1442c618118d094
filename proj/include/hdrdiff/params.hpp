// Copyright 2026 The hdrdiff Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef HDRDIFF_PARAMS_HPP
#define HDRDIFF_PARAMS_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "hdrdiff/autodiff.hpp"
#include "hdrdiff/tensor.hpp"

namespace hdrdiff {

/// How a parameter is initialized.
enum class Init {
  VarianceScaled,  ///< uniform with variance 1 / fan_in
  Zero,
  Constant,
};

/// Name, logical shape and initializer of one learnable tensor.
///
/// Logical shapes map onto matrices by taking the last dimension as columns
/// and folding the rest into rows: a 3x3 conv weight {3, 3, cin, cout} is a
/// (9*cin) x cout matrix, a bias {cout} is 1 x cout.
struct ParamSpec {
  std::string name;
  std::vector<int> dims;
  Init init = Init::VarianceScaled;
  int fan_in = 1;
  /// Constant fill for Init::Constant; a vector fills columns cyclically.
  std::vector<double> constant;

  std::int64_t numel() const {
    return std::accumulate(dims.begin(), dims.end(), std::int64_t{1}, std::multiplies<>());
  }
};

inline Eigen::Index matrix_cols(const std::vector<int>& dims) { return dims.empty() ? 1 : dims.back(); }
inline Eigen::Index matrix_rows(const std::vector<int>& dims) {
  Eigen::Index r = 1;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) r *= dims[i];
  return r;
}

template <typename Scalar>
struct Parameter {
  std::vector<int> dims;
  Matrix<Scalar> value;
  Matrix<Scalar> grad;
  Matrix<Scalar> ema;
};

/// Named collection of learnable tensors with gradient slots and EMA shadows.
/// Iteration order is lexicographic by name.
template <typename Scalar>
class ParamStore {
 public:
  void add(const std::string& name, std::vector<int> dims, Matrix<Scalar> value) {
    if (value.rows() != matrix_rows(dims) || value.cols() != matrix_cols(dims))
      throw ShapeMismatch("ParamStore::add: value does not match dims for " + name);
    Parameter<Scalar> p;
    p.dims = std::move(dims);
    p.grad = Matrix<Scalar>::Zero(value.rows(), value.cols());
    p.ema = value;
    p.value = std::move(value);
    params_[name] = std::move(p);
  }

  bool contains(const std::string& name) const { return params_.count(name) != 0; }

  Parameter<Scalar>& at(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw Error("ParamStore: unknown parameter '" + name + "'");
    return it->second;
  }
  const Parameter<Scalar>& at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw Error("ParamStore: unknown parameter '" + name + "'");
    return it->second;
  }

  const std::map<std::string, Parameter<Scalar>>& entries() const { return params_; }
  std::map<std::string, Parameter<Scalar>>& entries() { return params_; }
  std::size_t size() const { return params_.size(); }

  std::int64_t parameter_count() const {
    std::int64_t n = 0;
    for (const auto& [_, p] : params_) n += p.value.size();
    return n;
  }

  void zero_grad() {
    for (auto& [_, p] : params_) p.grad.setZero();
  }

  /// ema <- decay * ema + (1 - decay) * value.
  void update_ema(double decay) {
    const Scalar d(decay);
    for (auto& [_, p] : params_) p.ema = d * p.ema + (Scalar(1) - d) * p.value;
  }

  /// Copy whose values are the EMA shadows.
  ParamStore ema_weights() const {
    ParamStore out = *this;
    for (auto& [_, p] : out.params_) p.value = p.ema;
    return out;
  }

  template <typename Other>
  ParamStore<Other> cast() const {
    ParamStore<Other> out;
    for (const auto& [name, p] : params_) {
      out.add(name, p.dims, p.value.template cast<Other>());
      out.at(name).ema = p.ema.template cast<Other>();
    }
    return out;
  }

  /// Adds every parameter-leaf gradient recorded in g into the grad slots.
  void accumulate(const ad::Graph<Scalar>& g) {
    g.for_each_parameter_grad([this](const std::string& name, const Matrix<Scalar>& grad) { at(name).grad += grad; });
  }

 private:
  std::map<std::string, Parameter<Scalar>> params_;
};

/// Graph leaf for a stored parameter.
template <typename Scalar>
ad::Var param(ad::Graph<Scalar>& g, const ParamStore<Scalar>& store, const std::string& name) {
  return g.parameter(name, store.at(name).value);
}

template <typename Scalar>
Matrix<Scalar> initial_value(const ParamSpec& spec, std::mt19937_64& rng) {
  Matrix<Scalar> m(matrix_rows(spec.dims), matrix_cols(spec.dims));
  switch (spec.init) {
    case Init::Zero:
      m.setZero();
      break;
    case Init::Constant:
      for (Eigen::Index c = 0; c < m.cols(); ++c)
        m.col(c).setConstant(Scalar(spec.constant.empty() ? 0.0 : spec.constant[c % spec.constant.size()]));
      break;
    case Init::VarianceScaled: {
      const double limit = std::sqrt(3.0 / std::max(1, spec.fan_in));
      std::uniform_real_distribution<double> u(-limit, limit);
      for (Eigen::Index c = 0; c < m.cols(); ++c)
        for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = Scalar(u(rng));
      break;
    }
  }
  return m;
}

/// Allocates and initializes every spec in declaration order.
template <typename Scalar>
ParamStore<Scalar> make_store(const std::vector<ParamSpec>& specs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ParamStore<Scalar> store;
  for (const ParamSpec& s : specs) {
    if (store.contains(s.name)) throw Error("duplicate parameter name '" + s.name + "'");
    store.add(s.name, s.dims, initial_value<Scalar>(s, rng));
  }
  return store;
}

}  // namespace hdrdiff

#endif  // HDRDIFF_PARAMS_HPP
