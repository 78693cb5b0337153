// Copyright 2026 The Promptsmith Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include "promptsmith/errors.hpp"
#include "promptsmith/image.hpp"
#include "promptsmith/random.hpp"
#include "test_util.hpp"

namespace ps = promptsmith;

TEST(Image, PngRoundTrip) {
  ps::Rng rng(9);
  const auto img = ps::testing::random_image(rng, 37, 21);
  const auto bytes = ps::encode_png(img);
  EXPECT_EQ(ps::decode_png(bytes), img);

  const auto dir = ps::testing::scratch_dir("png");
  ps::write_png(img, dir / "x.png");
  EXPECT_EQ(ps::read_png(dir / "x.png"), img);
}

TEST(Image, DecodeRejectsGarbage) {
  const std::vector<std::uint8_t> junk{1, 2, 3, 4, 5};
  EXPECT_THROW(ps::decode_png(junk), ps::PreconditionError);
  EXPECT_THROW(ps::read_png("/nonexistent/nope.png"), ps::PreconditionError);
}

TEST(Image, Base64RoundTrip) {
  for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 100u}) {
    std::vector<std::uint8_t> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<std::uint8_t>(i * 37 + 1);
    EXPECT_EQ(ps::base64_decode(ps::base64_encode(v)), v) << n;
  }
  EXPECT_EQ(ps::base64_encode(std::vector<std::uint8_t>{'f', 'o', 'o'}), "Zm9v");
}

TEST(Image, BoxDownsampleOfConstantImage) {
  ps::Image img(40, 30, 51);
  const auto d = ps::box_downsample(img, 16, 16);
  ASSERT_EQ(d.size(), 16u * 16u * 3u);
  for (double v : d) EXPECT_NEAR(v, 51.0 / 255.0, 1e-12);
}

TEST(Image, ResizeKeepsSizeAndConstant) {
  ps::Image img(10, 10, 200);
  const auto r = ps::resize_bilinear(img, 33, 17);
  EXPECT_EQ(r.width, 33);
  EXPECT_EQ(r.height, 17);
  for (auto b : r.rgb) EXPECT_EQ(b, 200);
  ps::Rng rng(2);
  const auto x = ps::testing::random_image(rng, 12, 9);
  EXPECT_EQ(ps::resize_bilinear(x, 12, 9), x);
}
