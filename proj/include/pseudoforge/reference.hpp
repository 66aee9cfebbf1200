#pragma once

// Single-threaded, straightforward versions of the parallel kernels. They
// are kept for the equivalence tests and as the baseline in the benchmark.

#include "pseudoforge/bpm.hpp"
#include "pseudoforge/grid.hpp"

namespace pseudoforge::reference {

/// Laplacian on an explicitly replicate-padded copy of the input.
RealGrid laplacian(const RealGrid& p);

/// Weighted BCE accumulated in plain row-major order.
BceResult weighted_bce(const RealGrid& logits, const BitMask& target, const RealGrid& weights);

/// Downsampling by counting foreground cells of the (h*size) x (w*size)
/// refinement grid. O(h * w * size^2); only for small inputs.
BitMask downsample_mask(const BitMask& mask, int size);

/// Box filter by direct window summation.
ProbMask box_smooth(const BitMask& mask, int radius);

/// Distance transform computed on the calling thread.
DistanceField distance_to_boundary(const BitMask& mask);

}  // namespace pseudoforge::reference
