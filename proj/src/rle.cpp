#include "pseudoforge/rle.hpp"

#include <numeric>

namespace pseudoforge {

RleMask rle_encode(const BitMask& mask) {
  RleMask rle{mask.height(), mask.width(), {}};
  bool current = false;
  std::uint32_t run = 0;
  for (int c = 0; c < mask.width(); ++c) {
    for (int r = 0; r < mask.height(); ++r) {
      const bool bit = mask(r, c);
      if (bit != current) {
        rle.counts.push_back(run);
        run = 0;
        current = bit;
      }
      ++run;
    }
  }
  rle.counts.push_back(run);
  return rle;
}

BitMask rle_decode(const RleMask& rle) {
  if (rle.height < 1 || rle.width < 1) {
    throw Error(ErrorCode::InvalidArgument, "RLE dimensions must be at least 1x1");
  }
  const auto total = std::accumulate(rle.counts.begin(), rle.counts.end(), std::uint64_t{0});
  const auto expected = static_cast<std::uint64_t>(rle.height) * static_cast<std::uint64_t>(rle.width);
  if (total != expected) {
    throw Error(ErrorCode::CountMismatch, "RLE counts sum to " + std::to_string(total) +
                                              ", expected " + std::to_string(expected));
  }
  BitMask mask(rle.height, rle.width);
  std::uint64_t pos = 0;
  bool value = false;
  for (auto run : rle.counts) {
    if (value) {
      for (std::uint64_t k = pos; k < pos + run; ++k) {
        const auto col = static_cast<int>(k / static_cast<std::uint64_t>(rle.height));
        const auto row = static_cast<int>(k % static_cast<std::uint64_t>(rle.height));
        mask.set(row, col);
      }
    }
    pos += run;
    value = !value;
  }
  return mask;
}

}  // namespace pseudoforge
