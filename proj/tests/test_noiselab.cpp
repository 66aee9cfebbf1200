#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "oracles.hpp"
#include "pseudoforge/bpm.hpp"
#include "pseudoforge/mask_ops.hpp"
#include "pseudoforge/noiselab.hpp"
#include "pseudoforge/parallel.hpp"

using namespace pseudoforge;
using namespace pseudoforge::noiselab;

TEST_CASE("generator is deterministic and within coverage") {
  for (auto family : {ShapeFamily::Ellipse, ShapeFamily::Polygon}) {
    const auto a = gen_instances(100, 64, 17, family);
    const auto b = gen_instances(100, 64, 17, family);
    REQUIRE(a.size() == 100);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].gt == b[i].gt);
      CHECK(a[i].noisy == a[i].gt);
      CHECK_FALSE(extract_boundary(a[i].gt).empty());
      const double cover = double(a[i].gt.count()) / (64.0 * 64.0);
      CHECK(cover >= 0.10);
      CHECK(cover <= 0.60);
    }
  }
  CHECK(gen_instances(3, 32, 1, ShapeFamily::Ellipse)[2].gt == gen_instances(1, 32, 3, ShapeFamily::Ellipse)[0].gt);
}

TEST_CASE("circle area within rasterization tolerance") {
  for (double r : {3.0, 7.5, 12.0, 20.0}) {
    const BitMask m = rasterize(Ellipse{32, 32, r, r, 0.3}, 64, 64);
    CHECK(std::abs(double(m.count()) - std::numbers::pi * r * r) <= 2 * r);
  }
}

TEST_CASE("noise limits") {
  const auto inst = gen_instances(5, 48, 2, ShapeFamily::Ellipse);
  for (const auto& i : inst) {
    CHECK(inject_boundary_noise(i.gt, 0.0, 1.5, 9) == i.gt);
    const BitMask all = inject_boundary_noise(i.gt, 1.0, std::numeric_limits<double>::infinity(), 9);
    for (std::size_t k = 0; k < all.size(); ++k) CHECK(all.bits()[k] != i.gt.bits()[k]);
    CHECK(inject_boundary_noise(i.gt, 0.3, 2, 9) == inject_boundary_noise(i.gt, 0.3, 2, 9));
  }
  CHECK_THROWS_AS(inject_boundary_noise(inst[0].gt, 1.5, 1, 0), Error);
  CHECK_THROWS_AS(inject_boundary_noise(inst[0].gt, 0.5, 0, 0), Error);
}

TEST_CASE("flip frequency per distance bin matches the noise model") {
  const double q0 = 0.45, d0 = 1.5;
  auto inst = gen_instances(400, 64, 5, ShapeFamily::Ellipse);
  apply_noise(inst, {q0, d0}, 1234);
  // per unit distance bin: flips, expected flips and binomial variance
  std::vector<double> flips(6), expect(6), var(6);
  std::vector<std::int64_t> count(6);
  for (const auto& i : inst) {
    const auto dist = oracle::distance(i.gt);
    for (std::size_t k = 0; k < dist.size(); ++k) {
      const auto b = static_cast<std::size_t>(dist.values()[k]);
      if (b >= flips.size()) continue;
      const double q = q0 * std::exp(-dist.values()[k] / d0);
      flips[b] += i.noisy.bits()[k] != i.gt.bits()[k];
      expect[b] += q;
      var[b] += q * (1 - q);
      ++count[b];
    }
  }
  for (std::size_t b = 0; b < flips.size(); ++b) {
    if (count[b] < 10000) continue;
    CHECK(std::abs(flips[b] - expect[b]) <= 3 * std::sqrt(var[b]));
  }
  // the first bin holds only boundary pixels (d = 0), so its rate is q0
  CHECK(expect[0] == doctest::Approx(q0 * double(count[0])));
}

TEST_CASE("noise is independent of the thread count") {
  auto a = gen_instances(40, 64, 3, ShapeFamily::Polygon);
  auto b = a;
  set_num_threads(1);
  apply_noise(a, {0.4, 2}, 99);
  set_num_threads(4);
  apply_noise(b, {0.4, 2}, 99);
  set_num_threads(1);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].noisy == b[i].noisy);
}

TEST_CASE("noiseless curves are perfect") {
  auto inst = gen_instances(20, 64, 4, ShapeFamily::Ellipse);
  apply_noise(inst, {0.0, 1.5}, 1);
  const auto acc = accuracy_vs_distance(inst, 6);
  for (double a : acc.mean_accuracy) CHECK(a == 1.0);
  std::int64_t total = 0;
  for (auto c : acc.counts) total += c;
  CHECK(total == acc.total_pixels);
  CHECK(acc.bin_edges.size() == 7);
  CHECK(acc.bin_edges.front() == 0.0);

  const auto sizes = iou_vs_size(inst, {7, 14, 28, 56}, 0);
  for (std::size_t k = 0; k < sizes.sizes.size(); ++k) {
    CHECK(sizes.mask_iou[k] == 1.0);
    CHECK(sizes.boundary_iou[k] == 1.0);
  }
}

TEST_CASE("accuracy rises with distance") {
  auto inst = gen_instances(200, 64, 6, ShapeFamily::Ellipse);
  apply_noise(inst, {0.5, 2.0}, 7);
  const auto acc = accuracy_vs_distance(inst, 6);
  // the nearest bin is dominated by small distances: roughly 1 - q(small d)
  CHECK(acc.mean_accuracy[0] < 1 - 0.5 * std::exp(-4.0 / 2.0));
  for (std::size_t b = 1; b < acc.mean_accuracy.size(); ++b) CHECK(acc.mean_accuracy[b] >= acc.mean_accuracy[b - 1]);
}

TEST_CASE("bpm profile") {
  auto inst = gen_instances(30, 64, 8, ShapeFamily::Ellipse);
  apply_noise(inst, {0.0, 1.5}, 1);
  const auto prof = bpm_profile(inst, 1, kDefaultBpmFloor, 16, 10);
  std::size_t peak = 0;
  for (std::size_t b = 0; b < prof.mean_weight.size(); ++b) {
    if (prof.mean_weight[b] > prof.mean_weight[peak]) peak = b;
  }
  CHECK(prof.distance[peak] <= 2);
  CHECK(prof.mean_weight[0] < prof.mean_weight[peak]);
  for (std::size_t b = 7; b < prof.mean_weight.size(); ++b) CHECK(prof.mean_weight[b] < 0.25 * prof.mean_weight[peak]);
  std::int64_t n = 0;
  for (auto c : prof.quantile_counts) n += c;
  CHECK(n == 30 * 64 * 64);

  // constant map: the smoothing of a full mask is flat
  std::vector<SyntheticInstance> flat(1);
  flat[0].gt = BitMask(20, 20, true);
  flat[0].noisy = flat[0].gt;
  const auto fp = bpm_profile(flat, 2, kDefaultBpmFloor, 8, 4);
  for (std::size_t b = 0; b < fp.mean_weight.size(); ++b) {
    if (fp.distance_counts[b] > 0) CHECK(fp.mean_weight[b] == doctest::Approx(1.0));
  }
}
