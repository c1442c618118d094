// Copyright 2026 The hdrdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <functional>
#include <random>

#include "hdrdiff/autodiff.hpp"
#include "hdrdiff/params.hpp"
#include "support.hpp"

using namespace hdrdiff;
using hdrdiff::testing::finite_difference_check;
using hdrdiff::testing::normal_tensor;

namespace {

using G = ad::Graph<double>;
using Op = std::function<ad::Var(G&, const ParamStore<double>&)>;

// Feature-map leaves live in the store as (H*W) x C matrices; the op builder
// re-shapes them through g.push so spatial ops see the right geometry.
ad::Var leaf(G& g, const ParamStore<double>& s, const std::string& name, int h, int w) {
  const ad::Var p = param(g, s, name);
  return g.push(h, w, g.value(p), true, [p](G& g, int self) { g.grad(p) += g.grad(self); });
}

void add_random(ParamStore<double>& s, const std::string& name, Eigen::Index rows, Eigen::Index cols,
                std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix<double> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  s.add(name, {int(rows), int(cols)}, std::move(m));
}

// Loss = mean((op + offset)^2); the random offset keeps every output entry
// in play.
double check_op(ParamStore<double>& s, const Op& op, std::uint64_t seed) {
  Matrix<double> offset;
  auto loss = [&](bool record) {
    G g(record);
    const ad::Var out = op(g, s);
    if (offset.size() == 0) {
      std::mt19937_64 rng(seed);
      offset = normal_tensor<double>(g.height(out), g.width(out), g.channels(out), rng).data;
    }
    const ad::Var l = ad::mean_square(g, ad::add(g, out, g.constant(Tensor<double>(g.height(out), g.width(out), offset))));
    if (record) {
      s.zero_grad();
      g.backward(l);
      s.accumulate(g);
    }
    return g.value(l)(0, 0);
  };
  loss(true);
  double worst = 0.0;
  for (const auto& e : finite_difference_check(s, [&] { return loss(false); })) worst = std::max(worst, e.rel_error);
  return worst;
}

}  // namespace

TEST_SUITE("autodiff") {
  TEST_CASE("convolution gradients") {
    std::mt19937_64 rng(21);
    for (ad::Padding pad : {ad::Padding::Zero, ad::Padding::Reflect}) {
      for (int kernel : {1, 3}) {
        for (int stride : {1, 2}) {
          ParamStore<double> s;
          add_random(s, "x", 6 * 5, 2, rng);
          add_random(s, "w", kernel * kernel * 2, 3, rng);
          add_random(s, "b", 1, 3, rng);
          const ad::ConvSpec spec{kernel, stride, pad};
          const double err = check_op(s, [&](G& g, const ParamStore<double>& p) {
            return ad::conv2d(g, leaf(g, p, "x", 6, 5), param(g, p, "w"), param(g, p, "b"), spec);
          }, 1);
          CAPTURE(kernel);
          CAPTURE(stride);
          CHECK(err <= 1e-6);
        }
      }
    }
  }

  TEST_CASE("convolution matches a direct loop") {
    std::mt19937_64 rng(22);
    const Tensor<double> x = normal_tensor<double>(5, 4, 2, rng);
    const Tensor<double> w = normal_tensor<double>(18, 1, 3, rng);
    G g(false);
    const ad::Var y = ad::conv2d(g, g.constant(x), g.constant(w), ad::Var{}, {3, 1, ad::Padding::Zero});
    const Tensor<double> out = g.tensor(y);
    REQUIRE(out.height == 5);
    REQUIRE(out.width == 4);
    for (int oy = 0; oy < 5; ++oy)
      for (int ox = 0; ox < 4; ++ox)
        for (int co = 0; co < 3; ++co) {
          double acc = 0.0;
          for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx)
              for (int ci = 0; ci < 2; ++ci) {
                const int iy = oy + ky - 1, ix = ox + kx - 1;
                if (iy < 0 || iy >= 5 || ix < 0 || ix >= 4) continue;
                acc += x(iy, ix, ci) * w.data((ky * 3 + kx) * 2 + ci, co);
              }
          CHECK(out(oy, ox, co) == doctest::Approx(acc).epsilon(1e-12));
        }
  }

  TEST_CASE("elementwise gradients") {
    std::mt19937_64 rng(23);
    ParamStore<double> s;
    add_random(s, "a", 12, 3, rng);
    add_random(s, "b", 12, 3, rng);
    add_random(s, "v", 1, 3, rng);
    const std::vector<std::pair<const char*, Op>> ops = {
        {"add", [](G& g, const ParamStore<double>& p) { return ad::add(g, param(g, p, "a"), param(g, p, "b")); }},
        {"sub", [](G& g, const ParamStore<double>& p) { return ad::sub(g, param(g, p, "a"), param(g, p, "b")); }},
        {"mul", [](G& g, const ParamStore<double>& p) { return ad::mul(g, param(g, p, "a"), param(g, p, "b")); }},
        {"scale", [](G& g, const ParamStore<double>& p) { return ad::scale(g, param(g, p, "a"), -1.7); }},
        {"add_channels",
         [](G& g, const ParamStore<double>& p) { return ad::add_channels(g, param(g, p, "a"), param(g, p, "v")); }},
        {"silu", [](G& g, const ParamStore<double>& p) { return ad::silu(g, param(g, p, "a")); }},
        {"relu", [](G& g, const ParamStore<double>& p) { return ad::relu(g, param(g, p, "a")); }},
        {"sigmoid", [](G& g, const ParamStore<double>& p) { return ad::sigmoid(g, param(g, p, "a")); }},
        {"concat",
         [](G& g, const ParamStore<double>& p) {
           return ad::concat(g, {param(g, p, "a"), param(g, p, "b"), param(g, p, "a")});
         }},
        {"slice", [](G& g, const ParamStore<double>& p) { return ad::slice_channels(g, param(g, p, "a"), 1, 2); }},
    };
    for (const auto& [name, op] : ops) {
      CAPTURE(name);
      CHECK(check_op(s, op, 2) <= 1e-6);
    }
  }

  TEST_CASE("normalization, resampling and attention gradients") {
    std::mt19937_64 rng(24);
    ParamStore<double> s;
    add_random(s, "x", 4 * 3, 4, rng);
    add_random(s, "k", 4 * 3, 4, rng);
    add_random(s, "v", 4 * 3, 4, rng);
    add_random(s, "gamma", 1, 4, rng);
    add_random(s, "beta", 1, 4, rng);
    CHECK(check_op(s, [](G& g, const ParamStore<double>& p) {
      return ad::group_norm(g, param(g, p, "x"), param(g, p, "gamma"), param(g, p, "beta"), 2);
    }, 3) <= 1e-6);
    CHECK(check_op(s, [](G& g, const ParamStore<double>& p) { return ad::upsample2x(g, leaf(g, p, "x", 4, 3)); }, 4) <=
          1e-6);
    CHECK(check_op(s, [](G& g, const ParamStore<double>& p) {
      return ad::dot_product_attention(g, param(g, p, "x"), param(g, p, "k"), param(g, p, "v"));
    }, 5) <= 1e-6);
  }

  TEST_CASE("reduction gradients") {
    std::mt19937_64 rng(25);
    ParamStore<double> s;
    add_random(s, "a", 10, 2, rng);
    for (bool abs : {false, true}) {
      G g;
      const ad::Var a = param(g, s, "a");
      const ad::Var l = abs ? ad::mean_abs(g, a) : ad::mean_square(g, a);
      s.zero_grad();
      g.backward(l);
      s.accumulate(g);
      const auto errs = finite_difference_check(s, [&] {
        G h(false);
        const ad::Var b = param(h, s, "a");
        return h.value(abs ? ad::mean_abs(h, b) : ad::mean_square(h, b))(0, 0);
      });
      CHECK(errs[0].rel_error <= 1e-6);
    }
  }

  TEST_CASE("group norm output statistics") {
    std::mt19937_64 rng(26);
    const Tensor<double> x = normal_tensor<double>(6, 6, 8, rng);
    G g(false);
    const Matrix<double> one = Matrix<double>::Ones(1, 8), zero = Matrix<double>::Zero(1, 8);
    const ad::Var y = ad::group_norm(g, g.constant(x), g.parameter("g", one), g.parameter("b", zero), 4);
    const Matrix<double>& v = g.value(y);
    for (int k = 0; k < 4; ++k) {
      const auto blk = v.middleCols(2 * k, 2);
      CHECK(std::abs(blk.mean()) <= 1e-12);
      CHECK((blk.array() - blk.mean()).square().mean() == doctest::Approx(1.0).epsilon(1e-4));
    }
    CHECK_THROWS_AS(ad::group_norm(g, g.constant(x), g.parameter("g", one), g.parameter("b", zero), 3), ShapeMismatch);
  }

  TEST_CASE("attention rows are convex combinations") {
    std::mt19937_64 rng(27);
    const Tensor<double> q = normal_tensor<double>(3, 3, 4, rng);
    Tensor<double> v(3, 3, 4);
    v.data.setConstant(2.5);
    G g(false);
    const ad::Var o = ad::dot_product_attention(g, g.constant(q), g.constant(q), g.constant(v));
    CHECK((g.value(o).array() - 2.5).abs().maxCoeff() <= 1e-12);
  }

  TEST_CASE("shared parameter leaves accumulate") {
    ParamStore<double> s;
    s.add("w", {1, 1}, Matrix<double>::Constant(1, 1, 3.0));
    G g;
    const ad::Var a = param(g, s, "w");
    const ad::Var b = param(g, s, "w");
    CHECK(a.id == b.id);
    g.backward(ad::mean_square(g, ad::mul(g, a, b)));
    s.accumulate(g);
    // d/dw of w^4 at 3.
    CHECK(s.at("w").grad(0, 0) == doctest::Approx(108.0));
    G frozen(false);
    CHECK_THROWS_AS(frozen.backward(param(frozen, s, "w")), Error);
  }
}
