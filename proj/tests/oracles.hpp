#pragma once
// Brute-force oracles and random generators shared by the test binaries.
// None of these call into the code under test beyond the plain data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "pseudoforge/calib.hpp"
#include "pseudoforge/grid.hpp"

namespace oracle {

using namespace pseudoforge;

inline double unit(std::mt19937_64& eng) { return std::uniform_real_distribution<double>(0.0, 1.0)(eng); }
inline int uniform_int(std::mt19937_64& eng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(eng);
}

inline BitMask random_mask(std::mt19937_64& eng, int h, int w, double density) {
  BitMask m(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) m.set(r, c, unit(eng) < density);
  }
  return m;
}

inline bool fg(const BitMask& m, int r, int c) {
  return r >= 0 && c >= 0 && r < m.height() && c < m.width() && m(r, c);
}

inline BitMask boundary(const BitMask& m) {
  BitMask b(m.height(), m.width());
  for (int r = 0; r < m.height(); ++r) {
    for (int c = 0; c < m.width(); ++c) {
      if (m(r, c) && (!fg(m, r - 1, c) || !fg(m, r + 1, c) || !fg(m, r, c - 1) || !fg(m, r, c + 1))) {
        b.set(r, c);
      }
    }
  }
  return b;
}

/// O(N^2) nearest-boundary scan.
inline RealGrid distance(const BitMask& m) {
  const BitMask b = boundary(m);
  std::vector<std::pair<int, int>> pts;
  for (int r = 0; r < m.height(); ++r) {
    for (int c = 0; c < m.width(); ++c) {
      if (b(r, c)) pts.emplace_back(r, c);
    }
  }
  RealGrid d(m.height(), m.width(), std::numeric_limits<double>::infinity());
  for (int r = 0; r < m.height(); ++r) {
    for (int c = 0; c < m.width(); ++c) {
      for (auto [pr, pc] : pts) d(r, c) = std::min(d(r, c), std::hypot(double(r - pr), double(c - pc)));
    }
  }
  return d;
}

inline double iou(const BitMask& a, const BitMask& b) {
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    inter += a.bits()[i] && b.bits()[i];
    uni += a.bits()[i] || b.bits()[i];
  }
  return uni == 0 ? 1.0 : double(inter) / double(uni);
}

// ---------------------------------------------------------------------------
// Threshold sweeps.

inline std::int64_t target_count(std::int64_t instances, std::int64_t labeled, std::int64_t unlabeled) {
  const std::int64_t num = instances * unlabeled;
  const std::int64_t q = num / labeled, rem = num % labeled;
  return 2 * rem >= labeled ? q + 1 : q;
}

struct SweepResult {
  double threshold;
  std::int64_t kept;
};

/// Every distinct score (and the keep-nothing sentinel) as a candidate; the
/// one whose kept count is closest to `target` wins, ties toward the larger.
inline SweepResult box_sweep(const std::vector<double>& scores, std::int64_t target) {
  std::set<double> candidates(scores.begin(), scores.end());
  candidates.insert(kKeepNothing);
  SweepResult best{0, -1};
  std::int64_t best_gap = std::numeric_limits<std::int64_t>::max();
  for (double t : candidates) {
    const auto kept = std::count_if(scores.begin(), scores.end(), [&](double s) { return s >= t; });
    const auto gap = std::llabs(kept - target);
    if (gap < best_gap || (gap == best_gap && t > best.threshold)) {
      best = {t, kept};
      best_gap = gap;
    }
  }
  return best;
}

/// Same sweep over pooled probabilities, matching a fraction. Thresholds
/// live in (0,1): zero is never a candidate and 1.0 maps to the largest
/// double below it, which admits the same values.
inline double pixel_sweep(const std::vector<double>& pool, double fraction) {
  std::set<double> candidates(pool.begin(), pool.end());
  candidates.erase(0.0);
  if (candidates.empty()) return std::nextafter(0.0, 1.0);
  double best = 0, best_gap = std::numeric_limits<double>::infinity();
  for (double t : candidates) {
    const auto n = std::count_if(pool.begin(), pool.end(), [&](double v) { return v >= t; });
    const double gap = std::abs(double(n) / double(pool.size()) - fraction);
    if (gap < best_gap || (gap == best_gap && t > best)) {
      best = t;
      best_gap = gap;
    }
  }
  return std::min(best, std::nextafter(1.0, 0.0));
}

struct CalibFixture {
  LabeledStats stats;
  std::vector<Detection> preds;
  std::int64_t unlabeled = 1;
};

/// Random calibration problem: <= 10 images, <= 50 detections, <= 5
/// categories. `quantum` > 0 rounds probabilities to multiples of it.
inline CalibFixture random_calib(std::mt19937_64& eng, int mask_side = 5, double quantum = 0) {
  CalibFixture f;
  f.stats.num_images = uniform_int(eng, 1, 10);
  f.unlabeled = uniform_int(eng, 1, 10);
  const int cats = uniform_int(eng, 1, 5);
  for (int c = 1; c <= cats; ++c) {
    if (unit(eng) < 0.85) f.stats.instances_per_category[c] = uniform_int(eng, 0, 20);
  }
  f.stats.box_pixels = uniform_int(eng, 1, 5000);
  f.stats.fg_pixels = uniform_int(eng, 1, int(f.stats.box_pixels));
  f.stats.fg_pixel_fraction = double(f.stats.fg_pixels) / double(f.stats.box_pixels);
  const int n = uniform_int(eng, 1, 50);
  for (int i = 0; i < n; ++i) {
    Detection d;
    d.image_id = uniform_int(eng, 1, int(f.unlabeled));
    d.category_id = uniform_int(eng, 1, cats);
    d.score = unit(eng);
    d.box = {0, 0, 10, 10};
    std::vector<double> probs(std::size_t(mask_side) * mask_side);
    for (auto& p : probs) {
      p = unit(eng);
      if (quantum > 0) p = std::round(p / quantum) * quantum;
    }
    d.mask = ProbMask(mask_side, mask_side, std::move(probs));
    f.preds.push_back(std::move(d));
  }
  return f;
}

}  // namespace oracle
