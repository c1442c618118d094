// Copyright 2026 The hdrdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "hdrdiff/tonemap.hpp"
#include "support.hpp"

using namespace hdrdiff;
using hdrdiff::testing::uniform_tensor;

namespace {

Tensor<double> scalar(double v) { return Tensor<double>::constant(1, 1, 1, v); }

LdrSample<double> random_sample(std::mt19937_64& rng, int h = 5, int w = 6) {
  LdrSample<double> s;
  for (auto& f : s.ldrs) f = uniform_tensor<double>(h, w, 3, rng);
  return s;
}

}  // namespace

TEST_SUITE("tonemap") {
  TEST_CASE("mu-law compression values") {
    CHECK(mu_law_compress(scalar(0.0)).data(0, 0) == 0.0);
    CHECK(mu_law_compress(scalar(1.0)).data(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    const double half = mu_law_compress(scalar(0.5), 5000.0).data(0, 0);
    CHECK(half == doctest::Approx(std::log(2501.0) / std::log(5001.0)).epsilon(1e-14));
    CHECK(half == doctest::Approx(0.918643).epsilon(1e-6));
    CHECK(kDefaultMu == 5000.0);
  }

  TEST_CASE("mu-law expansion values") {
    CHECK(mu_law_expand(scalar(0.0)).data(0, 0) == 0.0);
    CHECK(mu_law_expand(scalar(1.0)).data(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(mu_law_expand(scalar(0.918643)).data(0, 0) == doctest::Approx(0.5).epsilon(1e-4));
  }

  TEST_CASE("mu-law domain checks") {
    CHECK_THROWS_AS(mu_law_compress(scalar(1.1)), DomainError);
    CHECK_THROWS_AS(mu_law_compress(scalar(-0.01)), DomainError);
    CHECK_THROWS_AS(mu_law_expand(scalar(1.5)), DomainError);
    CHECK_THROWS_AS(mu_law_compress(scalar(0.5), 0.0), InvalidArgument);
    CHECK_NOTHROW(mu_law_compress(scalar(1.0 + 5e-7)));
  }

  TEST_CASE("mu-law round trip") {
    std::mt19937_64 rng(11);
    const Tensor<float> xf = uniform_tensor<float>(100, 100, 1, rng);
    CHECK((mu_law_expand(mu_law_compress(xf)).data - xf.data).cwiseAbs().maxCoeff() <= 1e-5f);
    const Tensor<double> xd = uniform_tensor<double>(100, 100, 1, rng);
    CHECK((mu_law_expand(mu_law_compress(xd)).data - xd.data).cwiseAbs().maxCoeff() <= 1e-12);
  }

  TEST_CASE("mu-law compression is strictly increasing") {
    std::mt19937_64 rng(12);
    Tensor<double> x = uniform_tensor<double>(1, 1000, 1, rng);
    std::sort(x.data.data(), x.data.data() + x.data.size());
    const Tensor<double> y = mu_law_compress(x);
    for (Eigen::Index i = 1; i < y.data.size(); ++i)
      if (x.data(i) > x.data(i - 1)) CHECK(y.data(i) > y.data(i - 1));
    CHECK(y.data.minCoeff() >= 0.0);
    CHECK(y.data.maxCoeff() <= 1.0);
  }

  TEST_CASE("LDR to HDR domain") {
    CHECK(ldr_to_hdr_domain(scalar(0.0), 1.0).data(0, 0) == 0.0);
    CHECK(ldr_to_hdr_domain(scalar(1.0), 1.0).data(0, 0) == 1.0);
    CHECK(ldr_to_hdr_domain(scalar(0.5), 4.0, 2.2).data(0, 0) == doctest::Approx(std::pow(0.5, 2.2) / 4.0));
    CHECK(ldr_to_hdr_domain(scalar(0.5), 4.0, 2.2).data(0, 0) == doctest::Approx(0.0544094).epsilon(1e-6));
    CHECK(ldr_to_hdr_domain(scalar(1.0), 8.0).data(0, 0) == 0.125);
    CHECK_THROWS_AS(ldr_to_hdr_domain(scalar(0.5), 0.0), InvalidArgument);
    CHECK_THROWS_AS(ldr_to_hdr_domain(scalar(0.5), -1.0), InvalidArgument);

    Tensor<double> ramp(1, 101, 1);
    for (int i = 0; i <= 100; ++i) ramp.data(i, 0) = i / 100.0;
    const Tensor<double> h = ldr_to_hdr_domain(ramp, 0.25, 2.2);
    for (int i = 1; i <= 100; ++i) CHECK(h.data(i, 0) > h.data(i - 1, 0));
  }

  TEST_CASE("condition input layout") {
    std::mt19937_64 rng(13);
    const LdrSample<double> s = random_sample(rng);
    const ConditionInput<double> in = assemble_condition_input(s);
    for (int i = 0; i < 3; ++i) {
      REQUIRE(in.frames[i].channels() == 6);
      CHECK(in.frames[i].height == 5);
      CHECK(in.frames[i].width == 6);
      CHECK(in.frames[i].data.leftCols(3) == s.ldrs[i].data);
      Tensor<double> h = ldr_to_hdr_domain(s.ldrs[i], s.exposures[i], s.gamma);
      CHECK(in.frames[i].data.rightCols(3) == h.data.cwiseMin(1.0));
    }
    // The reference frame's HDR channels never need clipping.
    CHECK(in.frames[1].data.rightCols(3) == ldr_to_hdr_domain(s.ldrs[1], 1.0, s.gamma).data);
  }

  TEST_CASE("LDR sample validation") {
    std::mt19937_64 rng(14);
    LdrSample<double> s = random_sample(rng);
    CHECK_NOTHROW(validate(s));
    CHECK(s.exposures[0] == 0.25);
    CHECK(s.exposures[1] == 1.0);
    CHECK(s.exposures[2] == 4.0);

    LdrSample<double> bad = s;
    bad.ldrs[2] = uniform_tensor<double>(5, 7, 3, rng);
    CHECK_THROWS_AS(assemble_condition_input(bad), ShapeMismatch);
    bad = s;
    bad.exposures = {1.0, 0.5, 4.0};
    CHECK_THROWS_AS(validate(bad), InvalidArgument);
    bad = s;
    for (auto& f : bad.ldrs) f = uniform_tensor<double>(5, 6, 1, rng);
    CHECK_THROWS_AS(validate(bad), ShapeMismatch);
  }
}
