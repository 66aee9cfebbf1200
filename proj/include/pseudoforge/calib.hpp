#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "pseudoforge/grid.hpp"
#include "pseudoforge/rle.hpp"

namespace pseudoforge {

using ImageId = std::int64_t;
using CategoryId = std::int64_t;

struct ImageInfo {
  ImageId id = 0;
  int height = 1;
  int width = 1;
};

/// One teacher prediction. `mask` is the S x S probability map over `box`.
struct Detection {
  ImageId image_id = 0;
  CategoryId category_id = 0;
  double score = 0;
  Box box;
  ProbMask mask;
};

/// Ground-truth instance with a full-image mask.
struct GtInstance {
  ImageId image_id = 0;
  CategoryId category_id = 0;
  Box box;
  BitMask mask;
};

struct LabeledDataset {
  std::vector<ImageInfo> images;
  std::vector<GtInstance> annotations;
};

struct LabeledStats {
  std::int64_t num_images = 0;
  std::map<CategoryId, std::int64_t> instances_per_category;
  std::int64_t fg_pixels = 0;
  std::int64_t box_pixels = 0;
  /// fg_pixels / box_pixels; 0 when there are no box pixels.
  double fg_pixel_fraction = 0;

  double rate(CategoryId c) const;
};

/// Threshold strictly above every valid score: retains nothing.
inline const double kKeepNothing = std::nextafter(1.0, 2.0);

struct CategoryThreshold {
  double threshold = kKeepNothing;
  double rate = 0;               // labeled instances per image
  std::int64_t target = 0;       // round(rate * unlabeled images)
  std::int64_t available = 0;    // detections of this category
  std::int64_t kept = 0;         // detections with score >= threshold
  bool degenerate = true;        // keep-nothing sentinel in use
};

using BoxThresholds = std::map<CategoryId, CategoryThreshold>;

struct PixelThreshold {
  double threshold = 0.5;
  double target_fraction = 0;
  double achieved_fraction = 0;
  std::int64_t pooled = 0;
};

struct ThresholdSet {
  BoxThresholds box;
  PixelThreshold pixel;
  std::int64_t num_unlabeled_images = 0;
  /// Set when nothing was retained and `pixel.threshold` fell back to the
  /// test-time constant.
  bool pixel_degenerate = false;

  double box_threshold(CategoryId c) const;
};

struct PseudoInstance {
  CategoryId category_id = 0;
  Box box;
  double score = 0;
  RleMask mask;
};

struct PseudoLabelReport {
  struct Counts {
    std::int64_t kept = 0;
    std::int64_t below_threshold = 0;
    std::int64_t empty_mask = 0;
  };
  std::map<CategoryId, Counts> per_category;
  std::int64_t kept() const;
  std::int64_t dropped_empty() const;
};

struct PseudoLabelSet {
  std::vector<ImageInfo> images;
  /// Parallel to `images`.
  std::vector<std::vector<PseudoInstance>> instances;
  ThresholdSet thresholds;
  PseudoLabelReport report;
};

/// Per-category instance counts and in-box foreground fraction. Overlapping
/// boxes contribute their pixels once per box. Throws EmptyDataset for a
/// dataset without images and UnknownImage for dangling annotations.
LabeledStats compute_labeled_stats(const LabeledDataset& dataset);

/// Per category c: k = round(rate_c * num_unlabeled_images) and the
/// threshold is the k-th highest score of c. Categories appearing in either
/// the stats or the predictions are covered; k == 0 or no detections gives the
/// keep-nothing sentinel.
BoxThresholds solve_box_thresholds(const std::vector<Detection>& preds, const LabeledStats& stats,
                                   std::int64_t num_unlabeled_images);

/// Class-agnostic threshold over the pooled in-box probabilities of the
/// retained detections: the candidate value whose "fraction >= value" is
/// closest to the labeled foreground fraction, ties toward the larger value.
/// Throws NoRetainedDetections when nothing is pooled.
PixelThreshold solve_pixel_threshold(const std::vector<Detection>& retained,
                                     const LabeledStats& stats);

/// Detections with score >= the box threshold of their category.
std::vector<Detection> retain_detections(const std::vector<Detection>& preds,
                                         const BoxThresholds& thresholds);

/// Full calibration: box thresholds, then the pixel threshold over the
/// retained set. With nothing retained the pixel threshold falls back to
/// `fallback_pixel_threshold` and `pixel_degenerate` is set.
ThresholdSet calibrate(const std::vector<Detection>& preds, const LabeledStats& stats,
                       std::int64_t num_unlabeled_images,
                       double fallback_pixel_threshold = 0.5);

/// Box filter, pixel binarization and paste into image coordinates. Masks
/// that end up empty are dropped and counted. Throws UnknownImage.
PseudoLabelSet generate_pseudo_labels(const std::vector<Detection>& preds,
                                      const ThresholdSet& thresholds,
                                      const std::vector<ImageInfo>& images);

}  // namespace pseudoforge
