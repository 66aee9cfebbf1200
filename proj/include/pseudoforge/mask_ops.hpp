#pragma once

#include "pseudoforge/grid.hpp"

namespace pseudoforge {

/// Euclidean distance of every pixel to the nearest boundary pixel of a
/// reference mask. Zero exactly on boundary pixels.
using DistanceField = RealGrid;

/// Test-time pixel threshold used when no calibration is available.
inline constexpr double kTestPixelThreshold = 0.5;

/// Canonical mask-head target sides.
inline constexpr int kHighResSide = 28;
inline constexpr int kLowResSide = 14;

/// bit = p >= t. Throws InvalidThreshold unless 0 < t < 1.
BitMask binarize(const ProbMask& p, double t);

/// Foreground pixels with at least one 4-connected background neighbor;
/// pixels outside the image count as background.
BitMask extract_boundary(const BitMask& mask);

/// Exact Euclidean distance transform to the boundary of `mask`, computed
/// with the separable lower-envelope algorithm (columns, then rows).
/// Throws NoBoundary for an all-background mask.
DistanceField distance_to_boundary(const BitMask& mask);

/// Area-weighted box downsampling to size x size; an output pixel is
/// foreground when at least half of its footprint is foreground.
BitMask downsample_mask(const BitMask& mask, int size);

/// Area-weighted mean of `p` over size x size output cells.
ProbMask downsample_prob(const ProbMask& p, int size);

/// Copy of the pixels inside `region`. Throws EmptyBox for an empty region.
BitMask crop(const BitMask& mask, const PixelRegion& region);

BitMask hflip(const BitMask& mask);
ProbMask hflip(const ProbMask& p);

/// Bilinear resampling with half-pixel centers and edge clamping.
ProbMask resample_bilinear(const ProbMask& p, int height, int width);

/// Mean of the mask over a (2r+1)x(2r+1) window clipped to the image.
ProbMask box_smooth(const BitMask& mask, int radius);

/// Paste an S x S mask into a full image through nearest-neighbor scaling of
/// the box region. Pixels of the box falling outside the image are dropped.
BitMask paste_into_box(const BitMask& box_mask, const Box& box, int image_height,
                       int image_width);

}  // namespace pseudoforge
