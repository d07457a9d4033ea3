// Copyright 2026 The xmodal Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>

#include "test_util.hpp"
#include "xmodal/gradcheck.hpp"
#include "xmodal/image_encoder.hpp"

using namespace xmodal;
using namespace xmodal::testing;

namespace {

ImageSample random_image(std::size_t size, std::size_t channels, std::mt19937_64& rng) {
  return {random_tensor({size, size, channels}, rng, false, 0.0, 1.0)};
}

ImageEncoderConfig small_config() {
  ImageEncoderConfig c;
  c.image_size = 8;
  c.channels = 2;
  c.patch_size = 4;
  c.model_dim = 8;
  c.embed_dim = 6;
  c.encoder = {2, 8, 12, 1, 0.0};
  return c;
}

double norm(const Tensor& row) {
  double s = 0.0;
  for (double v : row.data()) s += v * v;
  return std::sqrt(s);
}

}  // namespace

TEST_SUITE("image_encoder") {
  TEST_CASE("patchify: 32x32 with patch 8 gives 16 patches of 192 values") {
    std::mt19937_64 rng(1);
    const TokenSequence p = patchify(random_image(32, 3, rng), 8);
    CHECK(p.tokens.shape() == Shape{16, 192});
  }

  TEST_CASE("patchify: row-major patches, channel-interleaved pixels") {
    std::vector<double> v(4 * 4 * 1);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
    const TokenSequence p = patchify({Tensor::from({4, 4, 1}, v)}, 2);
    REQUIRE(p.tokens.shape() == Shape{4, 4});
    const double expected[4][4] = {{0, 1, 4, 5}, {2, 3, 6, 7}, {8, 9, 12, 13}, {10, 11, 14, 15}};
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t c = 0; c < 4; ++c) CHECK(p.tokens.at(r, c) == expected[r][c]);
  }

  TEST_CASE("patchify: constant image and single lit pixel") {
    const TokenSequence c = patchify({Tensor::full({32, 32, 3}, 0.4)}, 8);
    for (std::size_t r = 1; r < 16; ++r)
      for (std::size_t k = 0; k < 192; ++k) CHECK(c.tokens.at(r, k) == c.tokens.at(0, k));
    Tensor lit = Tensor::zeros({32, 32, 3});
    lit.mutable_data()[0] = 1.0;
    const TokenSequence p = patchify({lit}, 8);
    for (std::size_t r = 0; r < 16; ++r) {
      double s = 0.0;
      for (std::size_t k = 0; k < 192; ++k) s += std::abs(p.tokens.at(r, k));
      CHECK((r == 0 ? s == 1.0 : s == 0.0));
    }
  }

  TEST_CASE("patchify rejects bad rasters") {
    CHECK_THROWS_AS(patchify({Tensor::zeros({30, 32, 3})}, 8), DimensionError);
    CHECK_THROWS_AS(patchify({Tensor::zeros({32, 32})}, 8), DimensionError);
  }

  TEST_CASE("toy config shapes and unit embedding") {
    std::mt19937_64 rng(2);
    const ImageEncoder enc(ImageEncoderConfig{}, rng);
    CHECK(ImageEncoderConfig{}.num_patches() == 16);
    const ImageTokens t = enc.encode(random_image(32, 3, rng), {});
    CHECK(t.tokens.tokens.shape() == Shape{16, 64});
    CHECK(t.embedding.shape() == Shape{1, 64});
    CHECK(std::abs(norm(t.embedding) - 1.0) < 1e-12);
  }

  TEST_CASE("one changed pixel changes the embedding") {
    std::mt19937_64 rng(3);
    const ImageEncoder enc(ImageEncoderConfig{}, rng);
    const ImageSample a = random_image(32, 3, rng);
    Tensor px = Tensor::from(a.pixels.shape(), std::vector<double>(a.pixels.data().begin(), a.pixels.data().end()));
    px.mutable_data()[500] = 1.0 - px.mutable_data()[500];
    CHECK(max_abs_diff(enc.encode(a, {}).embedding, enc.encode({px}, {}).embedding) > 1e-9);
  }

  TEST_CASE("mismatched raster is a dimension error") {
    std::mt19937_64 rng(4);
    const ImageEncoder enc(small_config(), rng);
    CHECK_THROWS_AS(enc.encode(random_image(8, 3, rng), {}), DimensionError);
  }

  TEST_CASE("eval mode is deterministic") {
    std::mt19937_64 a(5), b(5);
    const ImageEncoder e1(small_config(), a), e2(small_config(), b);
    std::mt19937_64 rng(6);
    const ImageSample img = random_image(8, 2, rng);
    const Tensor x = e1.encode(img, {}).embedding, y = e2.encode(img, {}).embedding;
    for (std::size_t i = 0; i < x.numel(); ++i) CHECK(x.data()[i] == y.data()[i]);
  }

  TEST_CASE("full image encoder gradient check") {
    for (std::uint64_t seed : {7u, 8u}) {
      std::mt19937_64 rng(seed);
      const ImageEncoder enc(small_config(), rng);
      ParamList params;
      enc.collect("i", params);
      const ImageSample img = random_image(8, 2, rng);
      GradCheckOptions opt;
      opt.max_elements_per_input = 6;
      opt.seed = seed;
      const auto r = check_gradients(
          [&] {
            const ImageTokens t = enc.encode(img, {});
            return add(weighted_sum(t.embedding), weighted_sum(t.tokens.tokens, 5));
          },
          tensors_of(params), opt);
      CHECK(r.max_relative_error < 1e-3);
    }
  }

  TEST_CASE("frozen parameters receive no gradient") {
    std::mt19937_64 rng(9);
    const ImageEncoder enc(small_config(), rng);
    ParamList params;
    enc.collect("i", params);
    for (NamedTensor& p : params) p.tensor.set_requires_grad(false);
    const Tensor e = enc.encode(random_image(8, 2, rng), {}).embedding;
    CHECK(!e.requires_grad());
    for (const NamedTensor& p : params) CHECK(!p.tensor.has_grad());
  }

  TEST_CASE("config validation") {
    ImageEncoderConfig c = small_config();
    c.patch_size = 3;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = small_config();
    c.encoder.model_dim = 4;
    c.encoder.num_heads = 2;
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }
}
