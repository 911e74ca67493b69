// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cibse/error.hpp"
#include "cibse/pipeline.hpp"
#include "oracles.hpp"

using namespace cibse;
using namespace cibse::pipeline;
using cibse::testing::random_tensor;

using cibse::testing::quadratic_nms;
using cibse::testing::random_dets;
using cibse::testing::random_image;
using cibse::testing::reflect_oracle;

TEST_CASE("letterbox of a square target-sized image") {
  std::mt19937_64 rng(1);
  const Image img = random_image(416, 416, rng);
  const Letterboxed lb = mirror_letterbox(img, 416);
  CHECK(lb.transform.scale == 1.0);
  CHECK(lb.transform.pad_left == 0);
  CHECK(lb.transform.pad_top == 0);
  CHECK(lb.tensor == resize_bilinear(img, 416, 416));
  CHECK(lb.tensor.at(0, 1, 10, 20) == static_cast<float>(img.at(10, 20, 1) / 255.0));
}

TEST_CASE("letterbox of a one-pixel-tall row") {
  Image img(4, 1);
  for (int x = 0; x < 4; ++x)
    for (int c = 0; c < 3; ++c) img.at(0, x, c) = static_cast<std::uint8_t>(40 * x + c);
  const Letterboxed lb = mirror_letterbox(img, 4);
  REQUIRE(lb.tensor.shape() == Shape{1, 3, 4, 4});
  CHECK(lb.transform.pad_top == 1);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x)
      for (int c = 0; c < 3; ++c) CHECK(lb.tensor.at(0, c, y, x) == lb.tensor.at(0, c, 1, x));
}

TEST_CASE("letterbox content and reflect padding") {
  const int sizes[][2] = {{640, 480}, {300, 500}, {37, 416}, {1000, 90}, {5, 3}, {416, 7}, {123, 122}};
  std::uint64_t seed = 0;
  for (auto [w, h] : sizes) {
    for (PadMode mode : {PadMode::Reflect, PadMode::Replicate}) {
      std::mt19937_64 rng(++seed);
      const Image img = random_image(w, h, rng);
      const Letterboxed lb = mirror_letterbox(img, 416, mode);
      const LetterboxTransform& t = lb.transform;
      REQUIRE(lb.tensor.shape() == Shape{1, 3, 416, 416});
      CHECK(std::max(t.content_w, t.content_h) == 416);
      CHECK(t.content_w + 2 * t.pad_left + (416 - t.content_w) % 2 == 416);
      CHECK(t.content_h + 2 * t.pad_top + (416 - t.content_h) % 2 == 416);
      const Tensor content = resize_bilinear(img, t.content_w, t.content_h);
      const int pad_right = 416 - t.content_w - t.pad_left;
      const int pad_bottom = 416 - t.content_h - t.pad_top;
      bool ok = true;
      for (int c = 0; c < 3 && ok; ++c)
        for (int y = 0; y < 416 && ok; ++y)
          for (int x = 0; x < 416 && ok; ++x) {
            int sy = y - t.pad_top;
            int sx = x - t.pad_left;
            if (mode == PadMode::Reflect) {
              sy = reflect_oracle(sy, t.content_h, t.pad_top, pad_bottom);
              sx = reflect_oracle(sx, t.content_w, t.pad_left, pad_right);
            } else {
              sy = std::clamp(sy, 0, t.content_h - 1);
              sx = std::clamp(sx, 0, t.content_w - 1);
            }
            ok = lb.tensor.at(0, c, y, x) == content.at(0, c, sy, sx);
          }
      CAPTURE(w);
      CAPTURE(h);
      CHECK(ok);
    }
  }
  CHECK_THROWS_AS(mirror_letterbox(Image{}, 416), DataError);
}

TEST_CASE("bilinear resize") {
  Image flat(9, 5, 51);
  const Tensor r = resize_bilinear(flat, 17, 3);
  for (float v : r.data()) CHECK(v == doctest::Approx(0.2));
  // Upscaling by two with half-pixel centres: interior samples sit a
  // quarter of the way between source pixels.
  Image ramp(2, 1);
  for (int c = 0; c < 3; ++c) {
    ramp.at(0, 0, c) = 0;
    ramp.at(0, 1, c) = 200;
  }
  const Tensor up = resize_bilinear(ramp, 4, 1);
  const double expect[] = {0.0, 50.0, 150.0, 200.0};
  for (int x = 0; x < 4; ++x) CHECK(up.at(0, 0, 0, x) == doctest::Approx(expect[x] / 255.0));
}

TEST_CASE("letterbox box round trip") {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> dim(20, 2000);
  for (int i = 0; i < 200; ++i) {
    const int w = dim(rng);
    const int h = dim(rng);
    const LetterboxTransform t = letterbox_transform(w, h, 416);
    std::uniform_real_distribution<float> fx(0.0f, static_cast<float>(w));
    std::uniform_real_distribution<float> fy(0.0f, static_cast<float>(h));
    float x1 = fx(rng), x2 = fx(rng), y1 = fy(rng), y2 = fy(rng);
    const Box b{std::min(x1, x2), std::min(y1, y2), std::max(x1, x2), std::max(y1, y2)};
    const Detection d{0, 0.5f, to_letterbox(t, b)};
    const Box back = unletterbox(t, std::span(&d, 1)).front().box;
    CHECK(std::abs(back.x1 - b.x1) <= 0.51f);
    CHECK(std::abs(back.y1 - b.y1) <= 0.51f);
    CHECK(std::abs(back.x2 - b.x2) <= 0.51f);
    CHECK(std::abs(back.y2 - b.y2) <= 0.51f);
  }
}

TEST_CASE("unletterbox") {
  LetterboxTransform t;
  t.scale = 0.5;
  t.pad_left = 10;
  t.orig_w = 200;
  t.orig_h = 100;
  const Detection d{1, 0.9f, {10, 0, 110, 50}};
  CHECK(unletterbox(t, std::span(&d, 1)).front().box == Box{0, 0, 200, 100});

  const Detection in_pad{0, 0.9f, {0, 5, 8, 20}};
  const Box clipped = unletterbox(t, std::span(&in_pad, 1)).front().box;
  CHECK(clipped.x1 == 0.0f);
  CHECK(clipped.x2 == 0.0f);

  LetterboxTransform id = letterbox_transform(416, 416, 416);
  const Detection e{0, 0.3f, {1.5f, 2.0f, 300.25f, 415.0f}};
  CHECK(unletterbox(id, std::span(&e, 1)).front() == e);
}

TEST_CASE("decode uniform and one-hot logits") {
  const int strides[] = {8, 16, 32};
  std::vector<Tensor> raw{Tensor({1, 66, 4, 4}), Tensor({1, 66, 2, 2}), Tensor({1, 66, 1, 1})};
  const std::vector<Detection> uni = decode_candidates(raw, strides, 16);
  REQUIRE(uni.size() == 21);
  CHECK(uni[0].box.x1 == doctest::Approx(4.0 - 60.0));
  CHECK(uni[0].box.x2 == doctest::Approx(4.0 + 60.0));
  CHECK(uni[20].box.y1 == doctest::Approx(16.0 - 240.0));
  CHECK(uni[20].score == 0.5f);

  for (Tensor& t : raw)
    for (int side = 0; side < 4; ++side)
      for (int i = 0; i < t.h(); ++i)
        for (int j = 0; j < t.w(); ++j) t.at(0, side * 16 + 3, i, j) = 40.0f;
  const std::vector<Detection> hot = decode_candidates(raw, strides, 16);
  std::size_t k = 0;
  for (int s = 0; s < 3; ++s) {
    const int n = 4 >> s;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j, ++k) {
        const double st = strides[s];
        const double cx = (j + 0.5) * st;
        const double cy = (i + 0.5) * st;
        CHECK(hot[k].box.x1 == doctest::Approx(cx - 3 * st).epsilon(1e-4));
        CHECK(hot[k].box.y2 == doctest::Approx(cy + 3 * st).epsilon(1e-4));
      }
  }
}

TEST_CASE("decode matches a per-cell brute-force decoder") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const int nc = 1 + static_cast<int>(seed % 3);
    const int stride[] = {32};
    const Tensor t = random_tensor({1, 64 + nc, 13, 13}, rng, -4.0f, 4.0f);
    const std::vector<Detection> got = decode_candidates(std::span(&t, 1), stride, 16);
    REQUIRE(got.size() == 169);
    for (int i = 0; i < 13; ++i)
      for (int j = 0; j < 13; ++j) {
        double d[4];
        for (int side = 0; side < 4; ++side) {
          double z = 0.0, m = 0.0;
          for (int b = 0; b < 16; ++b) {
            const double e = std::exp(static_cast<double>(t.at(0, side * 16 + b, i, j)));
            z += e;
            m += b * e;
          }
          d[side] = 32.0 * m / z;
          CHECK(d[side] >= 0.0);
          CHECK(d[side] <= 32.0 * 15);
        }
        int best = 0;
        for (int c = 0; c < nc; ++c)
          if (t.at(0, 64 + c, i, j) > t.at(0, 64 + best, i, j)) best = c;
        const Detection& g = got[static_cast<std::size_t>(i * 13 + j)];
        const double cx = (j + 0.5) * 32, cy = (i + 0.5) * 32;
        CHECK(g.class_id == best);
        CHECK(g.score == doctest::Approx(1.0 / (1.0 + std::exp(-t.at(0, 64 + best, i, j)))).epsilon(1e-6));
        CHECK(g.box.x1 == doctest::Approx(cx - d[0]).epsilon(1e-5));
        CHECK(g.box.y1 == doctest::Approx(cy - d[1]).epsilon(1e-5));
        CHECK(g.box.x2 == doctest::Approx(cx + d[2]).epsilon(1e-5));
        CHECK(g.box.y2 == doctest::Approx(cy + d[3]).epsilon(1e-5));
      }
    const float thr = 0.6f;
    const auto kept = decode_predictions(std::span(&t, 1), stride, 16, thr);
    CHECK(kept.size() == static_cast<std::size_t>(std::count_if(got.begin(), got.end(), [&](const Detection& x) {
            return x.score >= thr;
          })));
  }
}

TEST_CASE("candidate count at 416") {
  const int strides[] = {8, 16, 32};
  const std::vector<Tensor> raw{Tensor({1, 66, 52, 52}), Tensor({1, 66, 26, 26}), Tensor({1, 66, 13, 13})};
  CHECK(decode_candidates(raw, strides, 16).size() == 3549);
  CHECK_THROWS_AS(decode_candidates(raw, strides, 17), ShapeError);
}

TEST_CASE("nms examples") {
  const Box b{0, 0, 10, 10};
  const std::vector<Detection> same{{0, 0.9f, b}, {0, 0.8f, b}};
  const auto one = nms(same, 0.5f);
  REQUIRE(one.size() == 1);
  CHECK(one[0].score == 0.9f);
  const std::vector<Detection> diff{{0, 0.9f, b}, {1, 0.8f, b}};
  CHECK(nms(diff, 0.5f).size() == 2);
  CHECK(nms(std::vector<Detection>{}, 0.5f).empty());
}

TEST_CASE("nms equals the quadratic suppressor") {
  for (std::uint64_t seed = 0; seed < 120; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    const int n = 20 + static_cast<int>(seed % 40);
    const auto dets = random_dets(rng, n, 1 + static_cast<int>(seed % 3));
    const float thr = 0.2f + 0.1f * static_cast<float>(seed % 6);
    const int max_det = seed % 5 == 0 ? 7 : 300;
    const auto got = nms(dets, thr, max_det);
    CAPTURE(seed);
    CHECK(got == quadratic_nms(dets, thr, max_det));
    CHECK(nms(got, thr, max_det) == got);
    for (std::size_t i = 0; i < got.size(); ++i) {
      if (i) CHECK(got[i - 1].score >= got[i].score);
      for (std::size_t j = i + 1; j < got.size(); ++j)
        if (got[i].class_id == got[j].class_id) CHECK(iou(got[i].box, got[j].box) <= thr);
    }
  }
}
