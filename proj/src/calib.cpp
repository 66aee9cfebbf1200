#include "pseudoforge/calib.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <set>
#include <unordered_map>

#include "pseudoforge/mask_ops.hpp"

namespace pseudoforge {

double LabeledStats::rate(CategoryId c) const {
  auto it = instances_per_category.find(c);
  if (it == instances_per_category.end() || num_images <= 0) return 0.0;
  return double(it->second) / double(num_images);
}

double ThresholdSet::box_threshold(CategoryId c) const {
  auto it = box.find(c);
  return it == box.end() ? kKeepNothing : it->second.threshold;
}

std::int64_t PseudoLabelReport::kept() const {
  std::int64_t n = 0;
  for (const auto& [c, counts] : per_category) n += counts.kept;
  return n;
}

std::int64_t PseudoLabelReport::dropped_empty() const {
  std::int64_t n = 0;
  for (const auto& [c, counts] : per_category) n += counts.empty_mask;
  return n;
}

LabeledStats compute_labeled_stats(const LabeledDataset& dataset) {
  if (dataset.images.empty()) throw Error(ErrorCode::EmptyDataset, "labeled dataset has no images");
  std::unordered_map<ImageId, const ImageInfo*> by_id;
  for (const auto& img : dataset.images) by_id[img.id] = &img;

  LabeledStats stats;
  stats.num_images = static_cast<std::int64_t>(dataset.images.size());
  for (const auto& ann : dataset.annotations) {
    auto it = by_id.find(ann.image_id);
    if (it == by_id.end()) {
      throw Error(ErrorCode::UnknownImage, "annotation references image " + std::to_string(ann.image_id));
    }
    const ImageInfo& img = *it->second;
    if (ann.mask.height() != img.height || ann.mask.width() != img.width) {
      throw Error(ErrorCode::DimensionMismatch, "annotation mask does not match its image size");
    }
    ++stats.instances_per_category[ann.category_id];
    const PixelRegion region = box_pixel_region(ann.box, img.height, img.width);
    stats.box_pixels += region.area();
    for (int r = region.row0; r < region.row1; ++r) {
      for (int c = region.col0; c < region.col1; ++c) stats.fg_pixels += ann.mask(r, c) ? 1 : 0;
    }
  }
  stats.fg_pixel_fraction =
      stats.box_pixels > 0 ? double(stats.fg_pixels) / double(stats.box_pixels) : 0.0;
  return stats;
}

BoxThresholds solve_box_thresholds(const std::vector<Detection>& preds, const LabeledStats& stats,
                                   std::int64_t num_unlabeled_images) {
  if (num_unlabeled_images < 1) {
    throw Error(ErrorCode::InvalidArgument, "number of unlabeled images must be >= 1");
  }
  std::map<CategoryId, std::vector<double>> scores;
  for (const auto& [c, n] : stats.instances_per_category) scores[c];
  for (const auto& d : preds) scores[d.category_id].push_back(d.score);

  BoxThresholds out;
  for (auto& [category, s] : scores) {
    CategoryThreshold t;
    auto it = stats.instances_per_category.find(category);
    const std::int64_t instances = it == stats.instances_per_category.end() ? 0 : it->second;
    t.rate = stats.rate(category);
    // round(instances * U / images), halves rounded up, in exact integers.
    if (stats.num_images > 0) {
      t.target = (2 * instances * num_unlabeled_images + stats.num_images) / (2 * stats.num_images);
    }
    t.available = static_cast<std::int64_t>(s.size());
    if (t.target > 0 && t.available > 0) {
      std::sort(s.begin(), s.end(), std::greater<>());
      const std::int64_t k = std::min(t.target, t.available);
      t.threshold = s[static_cast<std::size_t>(k - 1)];
      t.degenerate = false;
      t.kept = std::count_if(s.begin(), s.end(), [&](double v) { return v >= t.threshold; });
    }
    out.emplace(category, t);
  }
  return out;
}

std::vector<Detection> retain_detections(const std::vector<Detection>& preds,
                                         const BoxThresholds& thresholds) {
  std::vector<Detection> kept;
  for (const auto& d : preds) {
    auto it = thresholds.find(d.category_id);
    const double t = it == thresholds.end() ? kKeepNothing : it->second.threshold;
    if (d.score >= t) kept.push_back(d);
  }
  return kept;
}

PixelThreshold solve_pixel_threshold(const std::vector<Detection>& retained,
                                     const LabeledStats& stats) {
  std::vector<double> pool;
  for (const auto& d : retained) pool.insert(pool.end(), d.mask.values().begin(), d.mask.values().end());
  if (pool.empty()) throw Error(ErrorCode::NoRetainedDetections, "no retained mask pixels to pool");

  std::sort(pool.begin(), pool.end(), std::greater<>());
  const double n = double(pool.size());
  const double target = stats.fg_pixel_fraction;

  // Walk distinct values from the top; the running count is |pool >= value|.
  // Strict improvement keeps the larger threshold on ties. Zero is not a
  // candidate: no threshold in (0,1) admits a zero probability.
  double best_value = std::nextafter(0.0, 1.0);
  double best_err = std::numeric_limits<double>::infinity();
  std::size_t i = 0;
  while (i < pool.size() && pool[i] > 0.0) {
    const double v = pool[i];
    while (i < pool.size() && pool[i] == v) ++i;
    const double err = std::abs(double(i) / n - target);
    if (err < best_err) {
      best_err = err;
      best_value = v;
    }
  }

  PixelThreshold out;
  out.threshold = std::clamp(best_value, std::nextafter(0.0, 1.0), std::nextafter(1.0, 0.0));
  out.target_fraction = target;
  out.pooled = static_cast<std::int64_t>(pool.size());
  const auto above = std::count_if(pool.begin(), pool.end(), [&](double v) { return v >= out.threshold; });
  out.achieved_fraction = double(above) / n;
  return out;
}

ThresholdSet calibrate(const std::vector<Detection>& preds, const LabeledStats& stats,
                       std::int64_t num_unlabeled_images, double fallback_pixel_threshold) {
  ThresholdSet set;
  set.num_unlabeled_images = num_unlabeled_images;
  set.box = solve_box_thresholds(preds, stats, num_unlabeled_images);
  const auto retained = retain_detections(preds, set.box);
  if (retained.empty()) {
    set.pixel.threshold = fallback_pixel_threshold;
    set.pixel.target_fraction = stats.fg_pixel_fraction;
    set.pixel_degenerate = true;
  } else {
    set.pixel = solve_pixel_threshold(retained, stats);
  }
  return set;
}

PseudoLabelSet generate_pseudo_labels(const std::vector<Detection>& preds,
                                      const ThresholdSet& thresholds,
                                      const std::vector<ImageInfo>& images) {
  std::unordered_map<ImageId, std::size_t> slot;
  for (std::size_t i = 0; i < images.size(); ++i) slot[images[i].id] = i;
  for (const auto& d : preds) {
    if (!slot.count(d.image_id)) {
      throw Error(ErrorCode::UnknownImage, "detection references image " + std::to_string(d.image_id));
    }
  }
  if (!(thresholds.pixel.threshold > 0.0 && thresholds.pixel.threshold < 1.0)) {
    throw Error(ErrorCode::InvalidThreshold, "pixel threshold must lie in (0,1)");
  }

  enum class Fate { Kept, BelowThreshold, EmptyMask };
  struct Outcome {
    Fate fate = Fate::BelowThreshold;
    PseudoInstance instance;
  };
  std::vector<Outcome> outcomes(preds.size());

#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(preds.size()); ++i) {
    const Detection& d = preds[static_cast<std::size_t>(i)];
    Outcome& o = outcomes[static_cast<std::size_t>(i)];
    if (!(d.score >= thresholds.box_threshold(d.category_id))) continue;
    const ImageInfo& img = images[slot.at(d.image_id)];
    const BitMask full =
        paste_into_box(binarize(d.mask, thresholds.pixel.threshold), d.box, img.height, img.width);
    if (full.empty()) {
      o.fate = Fate::EmptyMask;
      continue;
    }
    const double x0 = std::clamp(d.box.x, 0.0, double(img.width));
    const double y0 = std::clamp(d.box.y, 0.0, double(img.height));
    const double x1 = std::clamp(d.box.x + d.box.w, 0.0, double(img.width));
    const double y1 = std::clamp(d.box.y + d.box.h, 0.0, double(img.height));
    o.fate = Fate::Kept;
    o.instance = PseudoInstance{d.category_id, Box{x0, y0, x1 - x0, y1 - y0}, d.score, rle_encode(full)};
  }

  PseudoLabelSet out;
  out.images = images;
  out.instances.resize(images.size());
  out.thresholds = thresholds;
  for (const auto& [c, t] : thresholds.box) out.report.per_category[c];
  for (std::size_t i = 0; i < preds.size(); ++i) {
    auto& counts = out.report.per_category[preds[i].category_id];
    switch (outcomes[i].fate) {
      case Fate::Kept:
        ++counts.kept;
        out.instances[slot.at(preds[i].image_id)].push_back(std::move(outcomes[i].instance));
        break;
      case Fate::BelowThreshold: ++counts.below_threshold; break;
      case Fate::EmptyMask: ++counts.empty_mask; break;
    }
  }
  return out;
}

}  // namespace pseudoforge
