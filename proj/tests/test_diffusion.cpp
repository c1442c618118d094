// Copyright 2026 The hdrdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>

#include "hdrdiff/diffusion.hpp"
#include "support.hpp"

using namespace hdrdiff;
using hdrdiff::testing::normal_tensor;
using hdrdiff::testing::uniform_tensor;

namespace {

Tensor<double> scalar(double v) { return Tensor<double>::constant(1, 1, 1, v); }

// Schedule whose alpha_bars are exactly the requested values at t = 1, 2.
NoiseSchedule schedule_with_alpha_bars(double ab1, double ab2) { return NoiseSchedule({1.0 - ab1, 1.0 - ab2 / ab1}); }

Tensor<double> oracle_eps(const Tensor<double>& x_t, const Tensor<double>& x0, int t, const NoiseSchedule& s) {
  const double ab = s.alpha_bar(t);
  Tensor<double> e(x_t.height, x_t.width, x_t.channels());
  e.data = (x_t.data - std::sqrt(ab) * x0.data) / std::sqrt(1.0 - ab);
  return e;
}

}  // namespace

TEST_SUITE("diffusion") {
  TEST_CASE("forward diffusion closed form") {
    const NoiseSchedule s({0.1, 0.2, 0.3, 0.4});
    const double x = forward_diffuse(scalar(1.0), 4, scalar(1.0), s).data(0, 0);
    CHECK(x == doctest::Approx(std::sqrt(0.3024) + std::sqrt(0.6976)).epsilon(1e-14));

    std::mt19937_64 rng(1);
    const Tensor<double> x0 = uniform_tensor<double>(3, 4, 3, rng);
    const Tensor<double> zero(3, 4, 3);
    const double ab = s.alpha_bar(3);
    CHECK(forward_diffuse(x0, 3, zero, s).data.isApprox(std::sqrt(ab) * x0.data));
    const Tensor<double> eps = normal_tensor<double>(3, 4, 3, rng);
    CHECK(forward_diffuse(zero, 3, eps, s).data.isApprox(std::sqrt(1.0 - ab) * eps.data));

    CHECK_THROWS_AS(forward_diffuse(x0, 3, scalar(1.0), s), ShapeMismatch);
    CHECK_THROWS_AS(forward_diffuse(x0, 0, eps, s), IndexOutOfRange);
    CHECK_THROWS_AS(forward_diffuse(x0, 5, eps, s), IndexOutOfRange);
  }

  TEST_CASE("x0 recovery inverts the forward process") {
    const NoiseSchedule s({0.1, 0.2, 0.3, 0.4});
    const double x4 = std::sqrt(0.3024) + std::sqrt(0.6976);
    CHECK(predict_x0(scalar(x4), 4, scalar(1.0), s, false).data(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(predict_x0(scalar(2.0), 4, scalar(0.0), s, false).data(0, 0) ==
          doctest::Approx(2.0 / std::sqrt(0.3024)).epsilon(1e-14));
    CHECK(predict_x0(scalar(3.0), 4, scalar(0.0), s, true).data(0, 0) == 1.0);
    CHECK(predict_x0(scalar(-3.0), 4, scalar(0.0), s, true).data(0, 0) == 0.0);

    const NoiseSchedule big = linear_beta_schedule(1000, 1e-4, 0.02);
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<int> pick(1, 1000);
    for (int trial = 0; trial < 100; ++trial) {
      const Tensor<double> x0 = uniform_tensor<double>(4, 4, 3, rng);
      const Tensor<double> eps = normal_tensor<double>(4, 4, 3, rng);
      const int t = pick(rng);
      const Tensor<double> back = predict_x0(forward_diffuse(x0, t, eps, big), t, eps, big, false);
      CHECK((back.data - x0.data).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }

  TEST_CASE("single-precision round trip is limited only by storing x_t") {
    // The float latent carries half an ulp of rounding, which the inversion
    // divides by sqrt(abar_t). Nothing else may contribute.
    const NoiseSchedule big = linear_beta_schedule(1000, 1e-4, 0.02);
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> pick(1, 1000);
    for (int trial = 0; trial < 100; ++trial) {
      const Tensor<float> x0 = uniform_tensor<float>(4, 4, 3, rng);
      const Tensor<float> eps = normal_tensor<float>(4, 4, 3, rng);
      const int t = pick(rng);
      const Tensor<float> x_t = forward_diffuse(x0, t, eps, big);
      const Tensor<float> back = predict_x0(x_t, t, eps, big, false);
      const double inv = 1.0 / std::sqrt(big.alpha_bar(t));
      for (Eigen::Index i = 0; i < x0.data.size(); ++i) {
        const double half_ulp = 0.5 * std::abs(std::nextafter(x_t.data.data()[i], 1e30f) - x_t.data.data()[i]);
        const double bound = half_ulp * inv + 0.5 * std::abs(std::nextafter(x0.data.data()[i], 2.0f) - x0.data.data()[i]);
        CHECK(std::abs(double(back.data.data()[i]) - double(x0.data.data()[i])) <= bound * 1.0001);
      }
    }
  }

  TEST_CASE("implicit step scalar evaluation") {
    // alpha_bar(t) = 0.25 at t = 2, alpha_bar(t_prev) = 0.81 at t_prev = 1.
    const NoiseSchedule s = schedule_with_alpha_bars(0.81, 0.25);
    const double x0_hat = (2.0 - std::sqrt(0.75)) / 0.5;
    CHECK(x0_hat == doctest::Approx(2.26795).epsilon(1e-5));
    const double out = ddim_step(scalar(2.0), 2, 1, scalar(1.0), s, false).data(0, 0);
    CHECK(out == doctest::Approx(0.9 * x0_hat + std::sqrt(0.19)).epsilon(1e-12));
    CHECK(out == doctest::Approx(2.47704).epsilon(1e-5));
  }

  TEST_CASE("implicit step to t_prev = 0 returns x0 estimate") {
    const NoiseSchedule s = linear_beta_schedule(50, 1e-3, 0.05);
    std::mt19937_64 rng(4);
    const Tensor<double> x = normal_tensor<double>(3, 3, 3, rng);
    const Tensor<double> e = normal_tensor<double>(3, 3, 3, rng);
    for (bool clip : {false, true}) {
      CHECK(ddim_step(x, 37, 0, e, s, clip).data.isApprox(predict_x0(x, 37, e, s, clip).data, 1e-14));
    }
    CHECK_THROWS_AS(ddim_step(x, 5, 5, e, s, false), OrderingError);
    CHECK_THROWS_AS(ddim_step(x, 5, 7, e, s, false), OrderingError);
    CHECK_THROWS_AS(ddim_step(x, 5, -1, e, s, false), OrderingError);
  }

  TEST_CASE("oracle predictor recovers the target under any plan") {
    const NoiseSchedule s = linear_beta_schedule(1000, 1e-4, 0.02);
    std::mt19937_64 rng(5);
    const Tensor<float> target = uniform_tensor<float>(4, 5, 3, rng);
    for (int n : {1, 5, 25, 1000}) {
      const SamplingPlan plan = make_plan(s, n);
      Tensor<float> x = normal_tensor<float>(4, 5, 3, rng);
      for (int i = 0; i < plan.size(); ++i) {
        const int t = plan.steps[i];
        const double ab = s.alpha_bar(t);
        Tensor<float> eps(4, 5, 3);
        eps.data = (x.data - float(std::sqrt(ab)) * target.data) / float(std::sqrt(1.0 - ab));
        // The x0 estimate is exact at every step along the trajectory.
        CHECK((predict_x0(x, t, eps, s, true).data - target.data).cwiseAbs().maxCoeff() <= 1e-4f);
        x = ddim_step(x, t, plan.next(i), eps, s, true);
      }
      CHECK((x.data - target.data).cwiseAbs().maxCoeff() <= 1e-4f);
    }
  }

  TEST_CASE("oracle step lands on the forward marginal") {
    const NoiseSchedule s = linear_beta_schedule(100, 1e-3, 0.05);
    std::mt19937_64 rng(6);
    const Tensor<double> target = uniform_tensor<double>(2, 2, 3, rng);
    const Tensor<double> x = normal_tensor<double>(2, 2, 3, rng);
    const Tensor<double> eps = oracle_eps(x, target, 80, s);
    const Tensor<double> out = ddim_step(x, 80, 30, eps, s, true);
    const double abp = s.alpha_bar(30);
    CHECK(out.data.isApprox(std::sqrt(abp) * target.data + std::sqrt(1.0 - abp) * eps.data, 1e-12));
  }

  TEST_CASE("ancestral step scalar evaluation") {
    const NoiseSchedule s({0.1, 0.2});
    const double ab1 = 0.9, ab2 = 0.72;
    const double x0_hat = (1.0 - std::sqrt(1.0 - ab2) * 0.5) / std::sqrt(ab2);
    CHECK(x0_hat == doctest::Approx(0.866707).epsilon(1e-6));
    const double mu = std::sqrt(ab1) * 0.2 / (1.0 - ab2) * x0_hat + std::sqrt(0.8) * (1.0 - ab1) / (1.0 - ab2) * 1.0;
    const double out = ddpm_step(scalar(1.0), 2, scalar(0.5), scalar(0.0), s, false).data(0, 0);
    CHECK(out == doctest::Approx(mu).epsilon(1e-12));
    CHECK(out == doctest::Approx(0.906745).epsilon(1e-6));
    const PosteriorParams<double> p = posterior(scalar(1.0), scalar(x0_hat), 2, s);
    CHECK(p.mu_tilde.data(0, 0) == doctest::Approx(mu).epsilon(1e-12));
    CHECK(p.beta_tilde == doctest::Approx(0.1 / 0.28 * 0.2).epsilon(1e-12));
  }

  TEST_CASE("ancestral step at t = 1 is deterministic") {
    const NoiseSchedule s({0.1, 0.2});
    const Tensor<double> out = ddpm_step(scalar(0.7), 1, scalar(0.3), scalar(0.0), s, false);
    CHECK(out.data(0, 0) == doctest::Approx(predict_x0(scalar(0.7), 1, scalar(0.3), s, false).data(0, 0)));
    CHECK(posterior(scalar(0.7), scalar(0.1), 1, s).beta_tilde == 0.0);
    CHECK_THROWS_AS(ddpm_step(scalar(0.7), 1, scalar(0.3), scalar(0.1), s, false), InvalidArgument);
  }

  TEST_CASE("ancestral step variance matches the posterior variance") {
    const NoiseSchedule s = linear_beta_schedule(10, 0.01, 0.2);
    const int t = 6;
    constexpr int n = 100000;
    std::mt19937_64 rng(7);
    std::normal_distribution<double> normal(0.0, 1.0);
    Tensor<double> x(1, 1, n), e(1, 1, n), z(1, 1, n);
    x.data.setConstant(0.4);
    e.data.setConstant(-0.2);
    for (int i = 0; i < n; ++i) z.data(0, i) = normal(rng);
    const Tensor<double> out = ddpm_step(x, t, e, z, s, false);
    const double mean = out.data.mean();
    const double var = (out.data.array() - mean).square().sum() / (n - 1);
    const double bt = s.posterior_variance(t);
    // Standard error of the sample variance of a Gaussian: bt * sqrt(2 / (n - 1)).
    CHECK(std::abs(var - bt) <= 3.0 * bt * std::sqrt(2.0 / (n - 1)));
  }

  TEST_CASE("generalized step with posterior variance equals the ancestral step") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.01, 0.3);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<double> betas(8);
      for (double& b : betas) b = u(rng);
      std::sort(betas.begin(), betas.end());
      const NoiseSchedule s(betas);
      double xa = normal(rng), xb = xa;
      for (int t = 8; t >= 1; --t) {
        const double eps_hat = normal(rng);
        const double z = t > 1 ? normal(rng) : 0.0;
        const double sigma = std::sqrt(s.posterior_variance(t));
        const Tensor<double> zt = scalar(z);
        xa = ddpm_step(scalar(xa), t, scalar(eps_hat), zt, s, false).data(0, 0);
        xb = implicit_step(scalar(xb), t, t - 1, scalar(eps_hat), sigma, &zt, s, false).data(0, 0);
        CHECK(std::abs(xa - xb) <= 1e-6);
        xb = xa;
      }
    }
  }
}
