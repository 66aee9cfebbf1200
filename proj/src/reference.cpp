#include "pseudoforge/reference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "detail.hpp"

namespace pseudoforge::reference {

RealGrid laplacian(const RealGrid& p) {
  const int h = p.height(), w = p.width();
  RealGrid padded(h + 2, w + 2);
  for (int r = -1; r <= h; ++r) {
    for (int c = -1; c <= w; ++c) {
      padded(r + 1, c + 1) = p(std::clamp(r, 0, h - 1), std::clamp(c, 0, w - 1));
    }
  }
  RealGrid out(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      out(r, c) = padded(r, c + 1) + padded(r + 2, c + 1) + padded(r + 1, c) +
                  padded(r + 1, c + 2) - 4.0 * padded(r + 1, c + 1);
    }
  }
  return out;
}

BceResult weighted_bce(const RealGrid& logits, const BitMask& target, const RealGrid& weights) {
  if (!logits.same_shape(target) || !logits.same_shape(weights)) {
    throw Error(ErrorCode::DimensionMismatch, "logits, target and weights must share dimensions");
  }
  const double n = double(logits.size());
  BceResult out{0.0, RealGrid(logits.height(), logits.width())};
  double sum = 0.0;
  for (int r = 0; r < logits.height(); ++r) {
    for (int c = 0; c < logits.width(); ++c) {
      const double z = std::clamp(logits(r, c), -kLogitClip, kLogitClip);
      const double p = 1.0 / (1.0 + std::exp(-z));
      const double y = target(r, c) ? 1.0 : 0.0;
      // ln(1 - p) written through the clipped logit to stay finite.
      const double log_p = -std::log1p(std::exp(-z));
      const double log_q = -std::log1p(std::exp(z));
      sum += weights(r, c) * (-y * log_p - (1 - y) * log_q);
      out.grad(r, c) = weights(r, c) * (p - y) / n;
    }
  }
  out.loss = sum / n;
  return out;
}

BitMask downsample_mask(const BitMask& mask, int size) {
  const std::int64_t h = mask.height(), w = mask.width(), s = size;
  BitMask out(size, size);
  for (std::int64_t r = 0; r < s; ++r) {
    for (std::int64_t c = 0; c < s; ++c) {
      std::int64_t fg = 0;
      for (std::int64_t y = r * h; y < (r + 1) * h; ++y) {
        for (std::int64_t x = c * w; x < (c + 1) * w; ++x) {
          fg += mask(static_cast<int>(y / s), static_cast<int>(x / s)) ? 1 : 0;
        }
      }
      out.set(static_cast<int>(r), static_cast<int>(c), 2 * fg >= h * w);
    }
  }
  return out;
}

ProbMask box_smooth(const BitMask& mask, int radius) {
  const int h = mask.height(), w = mask.width();
  RealGrid g(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      int count = 0, area = 0;
      for (int y = r - radius; y <= r + radius; ++y) {
        for (int x = c - radius; x <= c + radius; ++x) {
          if (y < 0 || y >= h || x < 0 || x >= w) continue;
          ++area;
          count += mask(y, x) ? 1 : 0;
        }
      }
      g(r, c) = double(count) / double(area);
    }
  }
  return ProbMask(std::move(g));
}

DistanceField distance_to_boundary(const BitMask& mask) {
  return detail::distance_transform(mask, false);
}

}  // namespace pseudoforge::reference
