// Copyright 2026 The hdrdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstring>
#include <fstream>
#include <random>

#include "hdrdiff/tensor_io.hpp"
#include "hdrdiff/unet.hpp"
#include "support.hpp"

using namespace hdrdiff;
using hdrdiff::testing::TempDir;
using hdrdiff::testing::tiny_config;
using hdrdiff::testing::uniform_tensor;

namespace {

NamedTensor random_named(const std::string& name, std::vector<std::uint32_t> dims, std::mt19937_64& rng) {
  NamedTensor t{name, std::move(dims), {}};
  std::normal_distribution<float> n(0.0f, 1.0f);
  t.data.resize(t.numel());
  for (float& v : t.data) v = n(rng);
  return t;
}

void put_u16(std::vector<char>& b, std::size_t at, std::uint16_t v) { std::memcpy(b.data() + at, &v, 2); }
void put_u32(std::vector<char>& b, std::size_t at, std::uint32_t v) { std::memcpy(b.data() + at, &v, 4); }

}  // namespace

TEST_SUITE("tensor_io") {
  TEST_CASE("round trip of tensors of every rank") {
    std::mt19937_64 rng(91);
    const std::vector<NamedTensor> in = {
        random_named("scalar", {}, rng),        random_named("vec", {7}, rng),
        random_named("mat", {3, 5}, rng),       random_named("img", {4, 6, 3}, rng),
        random_named("vol", {2, 3, 4, 5}, rng), random_named("empty", {3, 0, 2}, rng),
        random_named("", {1}, rng),
    };
    const std::vector<NamedTensor> out = decode_tensors(encode_tensors(in));
    REQUIRE(out.size() == in.size());
    for (std::size_t i = 0; i < in.size(); ++i) {
      CHECK(out[i].name == in[i].name);
      CHECK(out[i].dims == in[i].dims);
      CHECK(out[i].data == in[i].data);
    }
    CHECK(out[0].numel() == 1);
    CHECK(out[5].numel() == 0);
  }

  TEST_CASE("byte layout") {
    const std::vector<char> empty = encode_tensors({});
    REQUIRE(empty.size() == 10);
    CHECK(std::string(empty.data(), 4) == "HDRF");
    CHECK(empty[4] == 1);
    CHECK(empty[5] == 0);
    CHECK(decode_tensors(empty).empty());

    const std::vector<char> one = encode_tensors({NamedTensor{"ab", {2}, {1.0f, -2.0f}}});
    // header 10 + name length 2 + name 2 + ndim 1 + dim 4 + data 8
    REQUIRE(one.size() == 27);
    CHECK(one[6] == 1);
    CHECK(one[10] == 2);
    CHECK(one[12] == 'a');
    CHECK(one[14] == 1);
    CHECK(one[15] == 2);
    float v;
    std::memcpy(&v, one.data() + 23, 4);
    CHECK(v == -2.0f);
  }

  TEST_CASE("malformed files raise distinct errors") {
    const std::vector<char> good = encode_tensors({NamedTensor{"x", {2, 2}, {1, 2, 3, 4}}});
    std::vector<char> b = good;
    b[0] = 'X';
    CHECK_THROWS_AS(decode_tensors(b), BadMagicError);
    b = good;
    put_u16(b, 4, 2);
    CHECK_THROWS_AS(decode_tensors(b), VersionMismatchError);
    for (std::size_t cut : {std::size_t{3}, std::size_t{8}, std::size_t{12}, good.size() - 1}) {
      b.assign(good.begin(), good.begin() + long(cut));
      CAPTURE(cut);
      CHECK_THROWS_AS(decode_tensors(b), TruncatedFileError);
    }
    b = good;
    put_u32(b, 14, 0xFFFFFFFFu);
    put_u32(b, 18, 0xFFFFFFFFu);
    CHECK_THROWS_AS(decode_tensors(b), DimOverflowError);
    b = good;
    b.push_back(0);
    CHECK_THROWS_AS(decode_tensors(b), LoadError);
    // Every specific error is also a load error.
    CHECK_THROWS_AS(decode_tensors(std::vector<char>{'H', 'D'}), LoadError);
    CHECK_THROWS_AS(read_tensors("/nonexistent/file.hdrf"), LoadError);
  }

  TEST_CASE("image tensors keep pixel order") {
    std::mt19937_64 rng(92);
    const Tensor<float> img = uniform_tensor<float>(5, 7, 3, rng);
    const NamedTensor n = to_named("img", img);
    CHECK(n.dims == std::vector<std::uint32_t>{5, 7, 3});
    // Row-major (H, W, C): channel varies fastest.
    CHECK(n.data[(2 * 7 + 3) * 3 + 1] == img(2, 3, 1));
    CHECK(from_named<float>(n).data == img.data);
    TempDir dir("io");
    write_image_tensor(dir / "a.hdrf", img);
    CHECK(read_image_tensor<float>(dir / "a.hdrf").data == img.data);
    CHECK_THROWS_AS(from_named<float>(NamedTensor{"v", {4}, {0, 0, 0, 0}}), LoadError);
  }

  TEST_CASE("checkpoint round trip") {
    const ModelConfig cfg = tiny_config();
    TrainConfig tc;
    tc.patch_size = 8;
    tc.seed = 5;
    TrainState<float> st = make_train_state<float>(cfg, tc);
    std::mt19937_64 rng(93);
    st.params.update_ema(0.5);
    for (auto& [name, p] : st.params.entries()) {
      st.adam.m[name] = Matrix<float>::Constant(p.value.rows(), p.value.cols(), 0.25f);
      st.adam.v[name] = Matrix<float>::Constant(p.value.rows(), p.value.cols(), 0.5f);
    }
    st.adam.step = 12;
    st.iteration = 34;
    st.rng.discard(1000);
    TempDir dir("ckpt");
    const std::string text = "model.base_channels = 4\n# comment\n";
    save_checkpoint(dir / "c.hdrf", st, text);
    Checkpoint<float> ck = load_checkpoint<float>(dir / "c.hdrf");
    CHECK(ck.config_text == text);
    CHECK(ck.state.iteration == 34);
    CHECK(ck.state.adam.step == 12);
    CHECK(ck.state.rng() == st.rng());
    REQUIRE(ck.state.params.size() == st.params.size());
    for (const auto& [name, p] : st.params.entries()) {
      const Parameter<float>& q = ck.state.params.at(name);
      CHECK(q.dims == p.dims);
      CHECK(q.value == p.value);
      CHECK(q.ema == p.ema);
      CHECK(ck.state.adam.m.at(name) == st.adam.m.at(name));
      CHECK(ck.state.adam.v.at(name) == st.adam.v.at(name));
    }
    // Saving the restored state reproduces the file byte for byte.
    save_checkpoint(dir / "d.hdrf", ck.state, ck.config_text);
    save_checkpoint(dir / "c.hdrf", st, text);
    std::ifstream a(dir / "c.hdrf", std::ios::binary), b(dir / "d.hdrf", std::ios::binary);
    CHECK(std::string(std::istreambuf_iterator<char>(a), {}) == std::string(std::istreambuf_iterator<char>(b), {}));

    write_tensors(dir / "bad.hdrf", {to_named("img", uniform_tensor<float>(2, 2, 3, rng))});
    CHECK_THROWS_AS(load_checkpoint<float>(dir / "bad.hdrf"), LoadError);
  }
}
