#pragma once

#include <cstdint>
#include <vector>

#include "pseudoforge/grid.hpp"

namespace pseudoforge {

/// Uncompressed run-length mask: column-major runs alternating
/// background/foreground, always starting with a (possibly empty) background
/// run.
struct RleMask {
  int height = 1;
  int width = 1;
  std::vector<std::uint32_t> counts;

  bool operator==(const RleMask&) const = default;
};

RleMask rle_encode(const BitMask& mask);

/// Throws CountMismatch when the runs do not cover height*width pixels.
BitMask rle_decode(const RleMask& rle);

}  // namespace pseudoforge
