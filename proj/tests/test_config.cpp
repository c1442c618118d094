// Copyright 2026 The hdrdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>

#include "hdrdiff/config.hpp"
#include "support.hpp"

using namespace hdrdiff;
using hdrdiff::testing::TempDir;

namespace {

std::string config_error_key(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<none>";
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("defaults and overrides") {
    const RunConfig d = parse_config("");
    CHECK(d.model.base_channels == RunConfig::toy().model.base_channels);
    CHECK(d.train.patch_size == 32);
    CHECK(d.schedule.steps == 1000);
    CHECK(d.mu == 5000.0);

    const RunConfig c = parse_config(
        "# toy run\n"
        "model.base_channels = 16   # narrower\n"
        "model.channel_multipliers = 1, 2\n"
        "model.attn_levels = 1\n"
        "model.conditioning = concat_ldr\n"
        "\n"
        "train.learning_rate = 1e-3\n"
        "train.loss_image = false\n"
        "train.image_loss_norm = l1\n"
        "train.iterations = 77\n"
        "train.seed = 18446744073709551615\n"
        "schedule.steps = 200\n"
        "tonemap.mu = 100\n"
        "sampler.steps = 10\n");
    CHECK(c.model.base_channels == 16);
    CHECK(c.model.channel_multipliers == std::vector<int>{1, 2});
    CHECK(c.model.attn_levels == std::set<int>{1});
    CHECK(c.model.conditioning == Conditioning::ConcatLdr);
    CHECK(c.train.learning_rate == 1e-3);
    CHECK_FALSE(c.train.use_loss_image);
    CHECK(c.train.use_loss_noise);
    CHECK(c.train.image_loss_norm == ImageLossNorm::L1);
    CHECK(c.train.total_iters == 77);
    CHECK(c.train.seed == 18446744073709551615ULL);
    CHECK(c.schedule.build().steps() == 200);
    CHECK(c.train.mu == 100.0);
    CHECK(c.sampler.mu == 100.0);
  }

  TEST_CASE("errors name the offending key") {
    CHECK(config_error_key("model.bogus = 3\n") == "model.bogus");
    CHECK(config_error_key("train.batch = four\n") == "train.batch");
    CHECK(config_error_key("train.batch = 4.5\n") == "train.batch");
    CHECK(config_error_key("train.loss_noise = maybe\n") == "train.loss_noise");
    CHECK(config_error_key("train.image_loss_norm = l3\n") == "train.image_loss_norm");
    CHECK(config_error_key("model.conditioning = film\n") == "model.conditioning");
    CHECK(config_error_key("just some words\n") == "just some words");
    CHECK(config_error_key("train.patch_size = 30\n") == "train");
    CHECK(config_error_key("train.loss_noise = false\ntrain.loss_image = false\n") == "train");
    CHECK(config_error_key("model.base_channels = 0\n") == "model");
    CHECK(config_error_key("schedule.beta_end = 2\n") == "schedule");
    CHECK(config_error_key("sampler.steps = 1001\n") == "sampler");
    CHECK(config_error_key("tonemap.gamma = -1\n") == "tonemap.gamma");
    CHECK(config_error_key("train.log_every = 0\n") == "train.log_every");
    try {
      parse_config("foo = 1\n");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("'foo'") != std::string::npos);
    }
  }

  TEST_CASE("canonical text round trip") {
    RunConfig c = RunConfig::toy();
    c.model.channel_multipliers = {1, 3, 4};
    c.model.attn_levels = {0, 2};
    c.model.conditioning = Conditioning::ConcatAligned;
    c.train.learning_rate = 3.14159e-5;
    c.train.use_loss_noise = false;
    c.train.image_loss_norm = ImageLossNorm::L1;
    c.schedule.beta_end = 0.0123456789;
    c.mu = 1234.5;
    c.sampler.seed = 99;
    const RunConfig r = parse_config(to_text(c));
    CHECK(to_text(r) == to_text(c));
    CHECK(r.train.learning_rate == c.train.learning_rate);
    CHECK(r.schedule.beta_end == c.schedule.beta_end);
    CHECK(r.model.attn_levels == c.model.attn_levels);
  }

  TEST_CASE("loading from disk") {
    TempDir dir("cfg");
    std::ofstream(dir / "run.cfg") << "train.batch = 2\n";
    CHECK(load_config(dir / "run.cfg").train.batch == 2);
    CHECK_THROWS_AS(load_config(dir / "missing.cfg"), LoadError);
  }
}
