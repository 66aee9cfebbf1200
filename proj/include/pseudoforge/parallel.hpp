#pragma once

namespace pseudoforge {

/// Sets the OpenMP team size used by every parallel kernel. Values < 1 are
/// clamped to 1. No-op when built without OpenMP.
void set_num_threads(int n);
int num_threads();

/// Kernels below this many pixels run on the calling thread only.
inline constexpr long long kParallelPixelThreshold = 1 << 14;

}  // namespace pseudoforge
