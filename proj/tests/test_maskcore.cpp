#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "pseudoforge/mask_ops.hpp"
#include "pseudoforge/metrics.hpp"
#include "pseudoforge/parallel.hpp"
#include "pseudoforge/reference.hpp"
#include "pseudoforge/rle.hpp"

using namespace pseudoforge;

namespace {

BitMask from_rows(const std::vector<std::string>& rows) {
  BitMask m(int(rows.size()), int(rows[0].size()));
  for (int r = 0; r < m.height(); ++r) {
    for (int c = 0; c < m.width(); ++c) m.set(r, c, rows[r][c] == '#');
  }
  return m;
}

}  // namespace

TEST_CASE("rle examples") {
  CHECK(rle_encode(BitMask(2, 2)).counts == std::vector<std::uint32_t>{4});
  CHECK(rle_encode(BitMask(2, 2, true)).counts == std::vector<std::uint32_t>{0, 4});
  const BitMask one = from_rows({".#", ".."});
  CHECK(rle_encode(one).counts == std::vector<std::uint32_t>{2, 1, 1});

  CHECK(rle_decode({2, 2, {4}}) == BitMask(2, 2));
  CHECK(rle_decode({2, 2, {0, 4}}) == BitMask(2, 2, true));
  CHECK(rle_decode({2, 2, {2, 1, 1}}) == one);
}

TEST_CASE("rle decode rejects bad totals") {
  try {
    rle_decode({2, 2, {1, 1}});
    FAIL("expected CountMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CountMismatch);
  }
}

TEST_CASE("rle round trip on random masks") {
  std::mt19937_64 eng(11);
  for (int t = 0; t < 300; ++t) {
    const BitMask m = oracle::random_mask(eng, oracle::uniform_int(eng, 1, 20), oracle::uniform_int(eng, 1, 20),
                                          oracle::unit(eng));
    CHECK(rle_decode(rle_encode(m)) == m);
  }
}

TEST_CASE("binarize") {
  const ProbMask p(3, 3, 0.6);
  CHECK(binarize(p, 0.5) == BitMask(3, 3, true));
  CHECK(binarize(p, 0.7) == BitMask(3, 3, false));
  CHECK(binarize(p, 0.6) == BitMask(3, 3, true));
  CHECK(kTestPixelThreshold == 0.5);
  CHECK_THROWS_AS(binarize(p, 0.0), Error);
  CHECK_THROWS_AS(binarize(p, 1.0), Error);
}

TEST_CASE("extract boundary") {
  CHECK(extract_boundary(BitMask(4, 4)).empty());
  CHECK(extract_boundary(BitMask(3, 3, true)) == from_rows({"###", "#.#", "###"}));
  const BitMask single = from_rows({"...", ".#.", "..."});
  CHECK(extract_boundary(single) == single);

  std::mt19937_64 eng(3);
  for (int t = 0; t < 50; ++t) {
    const BitMask m = oracle::random_mask(eng, 9, 7, 0.6);
    CHECK(extract_boundary(m) == oracle::boundary(m));
  }
}

TEST_CASE("distance examples") {
  const BitMask single = from_rows({".....", ".....", "..#..", ".....", "....."});
  const auto d = distance_to_boundary(single);
  CHECK(d(2, 2) == 0.0);
  CHECK(d(2, 1) == 1.0);
  CHECK(d(1, 1) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(d(0, 0) == doctest::Approx(std::sqrt(8.0)).epsilon(1e-12));
  CHECK_THROWS_AS(distance_to_boundary(BitMask(3, 3)), Error);
}

TEST_CASE("distance matches brute force and is Lipschitz") {
  std::mt19937_64 eng(5);
  for (int t = 0; t < 60; ++t) {
    const int h = oracle::uniform_int(eng, 1, 32), w = oracle::uniform_int(eng, 1, 32);
    BitMask m = oracle::random_mask(eng, h, w, oracle::unit(eng) * 0.5);
    if (m.empty()) m.set(0, 0);
    const auto got = distance_to_boundary(m);
    const auto want = oracle::distance(m);
    double worst = 0;
    for (std::size_t i = 0; i < got.size(); ++i) worst = std::max(worst, std::abs(got.values()[i] - want.values()[i]));
    CHECK(worst <= 1e-9);
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        if (c + 1 < w) CHECK(std::abs(got(r, c) - got(r, c + 1)) <= std::sqrt(2.0) + 1e-9);
        if (r + 1 < h) CHECK(std::abs(got(r, c) - got(r + 1, c)) <= std::sqrt(2.0) + 1e-9);
      }
    }
  }
}

TEST_CASE("downsample") {
  const BitMask m = from_rows({"##..", "##..", "##..", "##.."});
  CHECK(downsample_mask(m, 2) == from_rows({"#.", "#."}));
  CHECK(downsample_mask(m, 4) == m);
  CHECK(kHighResSide == 28);
  CHECK(kLowResSide == 14);
  // exactly half covered: ties go to foreground
  CHECK(downsample_mask(from_rows({"#.", ".."}), 1) == BitMask(1, 1, false));
  CHECK(downsample_mask(from_rows({"#.", "#."}), 1) == BitMask(1, 1, true));
}

TEST_CASE("downsample inverts block upsampling") {
  std::mt19937_64 eng(8);
  for (int t = 0; t < 40; ++t) {
    const int n = oracle::uniform_int(eng, 1, 9), k = oracle::uniform_int(eng, 1, 5);
    const BitMask small = oracle::random_mask(eng, n, n, 0.5);
    BitMask big(n * k, n * k);
    for (int r = 0; r < n * k; ++r) {
      for (int c = 0; c < n * k; ++c) big.set(r, c, small(r / k, c / k));
    }
    CHECK(downsample_mask(big, n) == small);
  }
}

TEST_CASE("downsample matches the refinement-grid reference") {
  std::mt19937_64 eng(9);
  for (int t = 0; t < 60; ++t) {
    const BitMask m = oracle::random_mask(eng, oracle::uniform_int(eng, 1, 17), oracle::uniform_int(eng, 1, 17), 0.5);
    const int s = oracle::uniform_int(eng, 1, 12);
    CHECK(downsample_mask(m, s) == reference::downsample_mask(m, s));
  }
}

TEST_CASE("mask iou examples and properties") {
  const BitMask a = from_rows({"##", ".."});
  const BitMask b = from_rows({"#.", "#."});
  CHECK(mask_iou(a, b) == doctest::Approx(1.0 / 3.0));
  CHECK(mask_iou(a, a) == 1.0);
  CHECK(mask_iou(from_rows({"#.", ".."}), from_rows({"..", ".#"})) == 0.0);
  CHECK(mask_iou(BitMask(2, 2), BitMask(2, 2)) == 1.0);
  CHECK_THROWS_AS(mask_iou(BitMask(2, 2), BitMask(2, 3)), Error);

  std::mt19937_64 eng(4);
  for (int t = 0; t < 50; ++t) {
    const BitMask x = oracle::random_mask(eng, 6, 9, 0.4), y = oracle::random_mask(eng, 6, 9, 0.4);
    CHECK(mask_iou(x, y) == doctest::Approx(oracle::iou(x, y)).epsilon(1e-15));
    CHECK(mask_iou(hflip(x), hflip(y)) == mask_iou(x, y));
  }
}

TEST_CASE("boundary iou") {
  std::mt19937_64 eng(6);
  CHECK(default_boundary_band(64, 64) == 2);
  CHECK(default_boundary_band(14, 14) == 1);
  CHECK(default_boundary_band(56, 56) == 2);
  for (int t = 0; t < 50; ++t) {
    const BitMask a = oracle::random_mask(eng, 8, 8, 0.5), b = oracle::random_mask(eng, 8, 8, 0.5);
    const double d = 1 + oracle::uniform_int(eng, 0, 3);
    CHECK(boundary_iou(a, b, d) == boundary_iou(b, a, d));
    CHECK(boundary_iou(a, a, d) == 1.0);
    CHECK(boundary_iou(a, b, std::hypot(8.0, 8.0)) == doctest::Approx(mask_iou(a, b)).epsilon(1e-15));
  }
  CHECK(boundary_iou(from_rows({"##..", "##.."}), from_rows({"...#", "...#"}), 1) == 0.0);
}

TEST_CASE("boundary band is the inner band of the brute-force distance") {
  std::mt19937_64 eng(10);
  for (int t = 0; t < 30; ++t) {
    BitMask m = oracle::random_mask(eng, 12, 12, 0.7);
    m.set(5, 5);
    const auto dist = oracle::distance(m);
    const double d = 1.5;
    const BitMask band = boundary_band(m, d);
    for (int r = 0; r < 12; ++r) {
      for (int c = 0; c < 12; ++c) CHECK(band(r, c) == (m(r, c) && dist(r, c) <= d));
    }
  }
}

TEST_CASE("tta fusion") {
  std::mt19937_64 eng(2);
  std::vector<double> v(20);
  for (auto& x : v) x = oracle::unit(eng);
  const ProbMask p(4, 5, v);
  CHECK(tta_fuse({p}, {Transform::identity()}) == p);
  CHECK(tta_fuse({p, hflip(p)}, {Transform::identity(), Transform::flip()}) == p);

  const ProbMask fused = tta_fuse({ProbMask(3, 3, 0.2), ProbMask(3, 3, 0.6)}, {Transform{}, Transform{}});
  for (double x : fused.values()) CHECK(x == doctest::Approx(0.4).epsilon(1e-15));

  const ProbMask up = resample_bilinear(ProbMask(4, 4, 0.3), 8, 8);
  const ProbMask back = tta_fuse({ProbMask(4, 4, 0.3), up}, {Transform{}, Transform::scaled(2.0)});
  CHECK(back.height() == 4);
  for (double x : back.values()) CHECK(x == doctest::Approx(0.3));

  CHECK_THROWS_AS(tta_fuse({ProbMask(3, 3, 0.1), ProbMask(4, 4, 0.1)}, {Transform{}, Transform{}}), Error);
  CHECK(parse_transform("scale:0.5") == Transform::scaled(0.5));
  CHECK(to_string(parse_transform("hflip")) == "hflip");
}

TEST_CASE("box smoothing matches direct summation") {
  std::mt19937_64 eng(12);
  for (int t = 0; t < 30; ++t) {
    const BitMask m = oracle::random_mask(eng, oracle::uniform_int(eng, 1, 20), oracle::uniform_int(eng, 1, 20), 0.5);
    const int r = oracle::uniform_int(eng, 0, 3);
    const ProbMask a = box_smooth(m, r), b = reference::box_smooth(m, r);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.values()[i] == doctest::Approx(b.values()[i]).epsilon(1e-12));
  }
}

TEST_CASE("parallel distance transform equals the serial reference") {
  std::mt19937_64 eng(13);
  const BitMask m = oracle::random_mask(eng, 200, 150, 0.3);
  set_num_threads(4);
  const auto par = distance_to_boundary(m);
  set_num_threads(1);
  CHECK(par == reference::distance_to_boundary(m));
}

TEST_CASE("box regions and pasting") {
  const auto r = box_pixel_region({1, 2, 3, 4}, 10, 10);
  CHECK(r.row0 == 2);
  CHECK(r.row1 == 6);
  CHECK(r.col0 == 1);
  CHECK(r.col1 == 4);
  CHECK(box_pixel_region({-5, -5, 3, 3}, 10, 10).empty());

  const BitMask pasted = paste_into_box(BitMask(2, 2, true), {1, 1, 2, 3}, 6, 6);
  CHECK(pasted.count() == 6);
  CHECK(pasted(1, 1));
  CHECK(pasted(3, 2));
  CHECK_FALSE(pasted(4, 2));
  CHECK(tight_box(pasted) == Box{1, 1, 2, 3});
  CHECK_THROWS_AS(crop(pasted, PixelRegion{2, 2, 0, 3}), Error);
}
