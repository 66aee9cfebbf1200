#pragma once

#include <string>
#include <vector>

#include "pseudoforge/grid.hpp"

namespace pseudoforge {

/// |a n b| / |a u b|, 1.0 when both are empty. Throws DimensionMismatch.
double mask_iou(const BitMask& a, const BitMask& b);

/// Default band width: max(1, round(0.02 * image diagonal)).
int default_boundary_band(int height, int width);

/// Inner boundary band of `mask`: foreground pixels within Euclidean distance
/// d of its boundary. Empty for an empty mask.
BitMask boundary_band(const BitMask& mask, double d);

/// IoU of the two inner boundary bands; 1.0 when both bands are empty.
double boundary_iou(const BitMask& a, const BitMask& b, double d);

// ---------------------------------------------------------------------------
// Test-time augmentation fusion.

enum class TransformKind { Identity, HFlip, Scale };

/// How a probability map was produced from the original view. For Scale the
/// map was predicted on an input resized by `scale`.
struct Transform {
  TransformKind kind = TransformKind::Identity;
  double scale = 1.0;

  static Transform identity() { return {}; }
  static Transform flip() { return {TransformKind::HFlip, 1.0}; }
  static Transform scaled(double s) { return {TransformKind::Scale, s}; }

  bool operator==(const Transform&) const = default;
};

/// Parses "identity", "hflip" or "scale:<s>".
Transform parse_transform(const std::string& text);
std::string to_string(const Transform& t);

/// Undo each transform (bilinear resampling for scales) and average the maps
/// pixel-wise. Throws DimensionMismatch if the restored maps disagree in size.
ProbMask tta_fuse(const std::vector<ProbMask>& masks, const std::vector<Transform>& transforms);

}  // namespace pseudoforge
