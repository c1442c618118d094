// Copyright 2026 The hdrdiff Authors
// SPDX-License-Identifier: Apache-2.0

// Helpers shared by the unit tests and the acceptance runner: random
// tensors, a tiny model configuration and a finite-difference gradient check.

#ifndef HDRDIFF_TESTS_SUPPORT_HPP
#define HDRDIFF_TESTS_SUPPORT_HPP

#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "hdrdiff/model_config.hpp"
#include "hdrdiff/params.hpp"
#include "hdrdiff/tensor.hpp"

namespace hdrdiff::testing {

template <typename Scalar>
Tensor<Scalar> uniform_tensor(int h, int w, int c, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor<Scalar> t(h, w, c);
  for (Eigen::Index i = 0; i < t.data.size(); ++i) t.data.data()[i] = Scalar(u(rng));
  return t;
}

template <typename Scalar>
Tensor<Scalar> normal_tensor(int h, int w, int c, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Tensor<Scalar> t(h, w, c);
  for (Eigen::Index i = 0; i < t.data.size(); ++i) t.data.data()[i] = Scalar(n(rng));
  return t;
}

/// Smallest configuration exercising every mechanism (4789 parameters).
inline ModelConfig tiny_config(Conditioning cond = Conditioning::Dfa) {
  ModelConfig c;
  c.base_channels = 4;
  c.channel_multipliers = {1, 1};
  c.res_blocks = 1;
  c.time_embed_dim = 8;
  c.cond_features = 2;
  c.conditioning = cond;
  return c;
}

/// Overwrites every parameter with uniform values in [-amp, amp] so no
/// gradient path is blocked by zero initialization.
template <typename Scalar>
void randomize(ParamStore<Scalar>& store, std::mt19937_64& rng, double amp = 0.5) {
  std::uniform_real_distribution<double> u(-amp, amp);
  for (auto& [_, p] : store.entries())
    for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = Scalar(u(rng));
}

/// Fresh directory under the system temp path, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("hdrdiff_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

struct TensorGradError {
  std::string name;
  double rel_error = 0.0;
  double analytic_norm = 0.0;
};

/// Compares the grad slots of `store` (already filled by the caller) with
/// central differences of `loss` on every entry. Per tensor, the error is
/// |g_a - g_n| / max(|g_a|, |g_n|, floor) over the entries (L2 norms).
inline std::vector<TensorGradError> finite_difference_check(ParamStore<double>& store,
                                                            const std::function<double()>& loss,
                                                            double step = 1e-6, double floor = 1e-8) {
  std::vector<TensorGradError> out;
  for (auto& [name, p] : store.entries()) {
    Eigen::VectorXd numeric(p.value.size());
    for (Eigen::Index i = 0; i < p.value.size(); ++i) {
      double& v = p.value.data()[i];
      const double saved = v;
      v = saved + step;
      const double up = loss();
      v = saved - step;
      const double down = loss();
      v = saved;
      numeric(i) = (up - down) / (2.0 * step);
    }
    const Eigen::Map<const Eigen::VectorXd> analytic(p.grad.data(), p.grad.size());
    const double denom = std::max({analytic.norm(), numeric.norm(), floor});
    out.push_back({name, (analytic - numeric).norm() / denom, analytic.norm()});
  }
  return out;
}

}  // namespace hdrdiff::testing

#endif  // HDRDIFF_TESTS_SUPPORT_HPP
