#include "pseudoforge/mask_ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "detail.hpp"
#include "pseudoforge/parallel.hpp"

namespace pseudoforge {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// One-dimensional squared distance transform over sampled function f:
// out[q] = min_p (q - p)^2 + f[p]. Infinite samples never enter the envelope.
void lower_envelope(const std::vector<double>& f, std::vector<double>& out,
                    std::vector<int>& v, std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    double s = 0;
    for (;;) {
      const int p = v[k];
      s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
      if (s > z[k]) break;
      --k;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  if (k < 0) {
    std::fill(out.begin(), out.end(), kInf);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double d = q - v[j];
    out[q] = d * d + f[v[j]];
  }
}

}  // namespace

BitMask binarize(const ProbMask& p, double t) {
  if (!(t > 0.0 && t < 1.0)) {
    throw Error(ErrorCode::InvalidThreshold, "threshold must lie in (0,1)");
  }
  BitMask out(p.height(), p.width());
  auto src = p.values();
  auto dst = out.bits();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] >= t ? 1 : 0;
  return out;
}

BitMask extract_boundary(const BitMask& mask) {
  const int h = mask.height(), w = mask.width();
  BitMask out(h, w);
  auto fg = [&](int r, int c) { return r >= 0 && r < h && c >= 0 && c < w && mask(r, c); };
#pragma omp parallel for schedule(static) if (mask.size() >= kParallelPixelThreshold)
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!mask(r, c)) continue;
      if (!fg(r - 1, c) || !fg(r + 1, c) || !fg(r, c - 1) || !fg(r, c + 1)) out.set(r, c);
    }
  }
  return out;
}

DistanceField distance_to_boundary(const BitMask& mask) {
  return detail::distance_transform(mask, true);
}

DistanceField detail::distance_transform(const BitMask& mask, bool allow_parallel) {
  const BitMask boundary = extract_boundary(mask);
  if (boundary.empty()) {
    throw Error(ErrorCode::NoBoundary, "mask has no foreground pixels");
  }
  const int h = boundary.height(), w = boundary.width();
  RealGrid sq(h, w, kInf);
  const bool par = allow_parallel && boundary.size() >= kParallelPixelThreshold;

#pragma omp parallel if (par)
  {
    std::vector<double> f(h), out(h), z(h + 1);
    std::vector<int> v(h);
#pragma omp for schedule(static)
    for (int c = 0; c < w; ++c) {
      for (int r = 0; r < h; ++r) f[r] = boundary(r, c) ? 0.0 : kInf;
      lower_envelope(f, out, v, z);
      for (int r = 0; r < h; ++r) sq(r, c) = out[r];
    }
  }

  DistanceField dist(h, w, 0.0);
#pragma omp parallel if (par)
  {
    std::vector<double> f(w), out(w), z(w + 1);
    std::vector<int> v(w);
#pragma omp for schedule(static)
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) f[c] = sq(r, c);
      lower_envelope(f, out, v, z);
      for (int c = 0; c < w; ++c) dist(r, c) = std::sqrt(out[c]);
    }
  }
  return dist;
}

BitMask downsample_mask(const BitMask& mask, int size) {
  if (size < 1) throw Error(ErrorCode::InvalidArgument, "downsample size must be >= 1");
  const std::int64_t h = mask.height(), w = mask.width(), s = size;
  if (h == s && w == s) return mask;

  // Work on a grid scaled by `size` so all footprints have integer extents:
  // input pixel i spans [i*s, (i+1)*s), output pixel r spans [r*h, (r+1)*h).
  BitMask out(size, size);
  const std::int64_t footprint = h * w;
#pragma omp parallel for schedule(static) if (h * w >= kParallelPixelThreshold)
  for (int r = 0; r < size; ++r) {
    const std::int64_t y0 = r * h, y1 = (r + 1) * h;
    for (int c = 0; c < size; ++c) {
      const std::int64_t x0 = c * w, x1 = (c + 1) * w;
      std::int64_t fg = 0;
      for (std::int64_t i = y0 / s; i * s < y1; ++i) {
        const std::int64_t oy = std::min(y1, (i + 1) * s) - std::max(y0, i * s);
        std::int64_t row_fg = 0;
        for (std::int64_t j = x0 / s; j * s < x1; ++j) {
          if (!mask(static_cast<int>(i), static_cast<int>(j))) continue;
          row_fg += std::min(x1, (j + 1) * s) - std::max(x0, j * s);
        }
        fg += oy * row_fg;
      }
      out.set(r, c, 2 * fg >= footprint);
    }
  }
  return out;
}

ProbMask downsample_prob(const ProbMask& p, int size) {
  if (size < 1) throw Error(ErrorCode::InvalidArgument, "downsample size must be >= 1");
  const std::int64_t h = p.height(), w = p.width(), s = size;
  if (h == s && w == s) return p;
  RealGrid out(size, size);
  const double footprint = double(h) * double(w);
  for (int r = 0; r < size; ++r) {
    const std::int64_t y0 = r * h, y1 = (r + 1) * h;
    for (int c = 0; c < size; ++c) {
      const std::int64_t x0 = c * w, x1 = (c + 1) * w;
      double acc = 0;
      for (std::int64_t i = y0 / s; i * s < y1; ++i) {
        const double oy = double(std::min(y1, (i + 1) * s) - std::max(y0, i * s));
        double row = 0;
        for (std::int64_t j = x0 / s; j * s < x1; ++j) {
          row += double(std::min(x1, (j + 1) * s) - std::max(x0, j * s)) *
                 p(static_cast<int>(i), static_cast<int>(j));
        }
        acc += oy * row;
      }
      out(r, c) = std::clamp(acc / footprint, 0.0, 1.0);
    }
  }
  return ProbMask(std::move(out));
}

BitMask crop(const BitMask& mask, const PixelRegion& region) {
  if (region.empty()) throw Error(ErrorCode::EmptyBox, "crop region is empty");
  if (region.row0 < 0 || region.col0 < 0 || region.row1 > mask.height() ||
      region.col1 > mask.width()) {
    throw Error(ErrorCode::InvalidArgument, "crop region exceeds mask extent");
  }
  BitMask out(region.rows(), region.cols());
  for (int r = 0; r < region.rows(); ++r) {
    for (int c = 0; c < region.cols(); ++c) out.set(r, c, mask(region.row0 + r, region.col0 + c));
  }
  return out;
}

BitMask hflip(const BitMask& mask) {
  BitMask out(mask.height(), mask.width());
  for (int r = 0; r < mask.height(); ++r) {
    for (int c = 0; c < mask.width(); ++c) out.set(r, mask.width() - 1 - c, mask(r, c));
  }
  return out;
}

ProbMask hflip(const ProbMask& p) {
  RealGrid g(p.height(), p.width());
  for (int r = 0; r < p.height(); ++r) {
    for (int c = 0; c < p.width(); ++c) g(r, p.width() - 1 - c) = p(r, c);
  }
  return ProbMask(std::move(g));
}

ProbMask resample_bilinear(const ProbMask& p, int height, int width) {
  if (height == p.height() && width == p.width()) return p;
  RealGrid g(height, width);
  const double sy = double(p.height()) / height, sx = double(p.width()) / width;
  for (int r = 0; r < height; ++r) {
    const double y = std::clamp((r + 0.5) * sy - 0.5, 0.0, double(p.height() - 1));
    const int y0 = static_cast<int>(y);
    const int y1 = std::min(y0 + 1, p.height() - 1);
    const double wy = y - y0;
    for (int c = 0; c < width; ++c) {
      const double x = std::clamp((c + 0.5) * sx - 0.5, 0.0, double(p.width() - 1));
      const int x0 = static_cast<int>(x);
      const int x1 = std::min(x0 + 1, p.width() - 1);
      const double wx = x - x0;
      const double top = (1 - wx) * p(y0, x0) + wx * p(y0, x1);
      const double bottom = (1 - wx) * p(y1, x0) + wx * p(y1, x1);
      g(r, c) = std::clamp((1 - wy) * top + wy * bottom, 0.0, 1.0);
    }
  }
  return ProbMask(std::move(g));
}

ProbMask box_smooth(const BitMask& mask, int radius) {
  if (radius < 0) throw Error(ErrorCode::InvalidArgument, "smoothing radius must be >= 0");
  const int h = mask.height(), w = mask.width();
  // Summed-area table with a zero border row/column.
  std::vector<std::int64_t> sat(static_cast<std::size_t>(h + 1) * (w + 1), 0);
  auto at = [&](int r, int c) -> std::int64_t& { return sat[static_cast<std::size_t>(r) * (w + 1) + c]; };
  for (int r = 0; r < h; ++r) {
    std::int64_t run = 0;
    for (int c = 0; c < w; ++c) {
      run += mask(r, c) ? 1 : 0;
      at(r + 1, c + 1) = at(r, c + 1) + run;
    }
  }
  RealGrid g(h, w);
#pragma omp parallel for schedule(static) if (mask.size() >= kParallelPixelThreshold)
  for (int r = 0; r < h; ++r) {
    const int r0 = std::max(0, r - radius), r1 = std::min(h, r + radius + 1);
    for (int c = 0; c < w; ++c) {
      const int c0 = std::max(0, c - radius), c1 = std::min(w, c + radius + 1);
      const std::int64_t count = at(r1, c1) - at(r0, c1) - at(r1, c0) + at(r0, c0);
      g(r, c) = double(count) / double(std::int64_t(r1 - r0) * (c1 - c0));
    }
  }
  return ProbMask(std::move(g));
}

BitMask paste_into_box(const BitMask& box_mask, const Box& box, int image_height,
                       int image_width) {
  BitMask out(image_height, image_width);
  const PixelRegion region = box_pixel_region(box, image_height, image_width);
  if (region.empty() || box.w <= 0 || box.h <= 0) return out;
  const int sh = box_mask.height(), sw = box_mask.width();
  for (int r = region.row0; r < region.row1; ++r) {
    const int v = std::clamp(static_cast<int>(std::floor((r + 0.5 - box.y) / box.h * sh)), 0, sh - 1);
    for (int c = region.col0; c < region.col1; ++c) {
      const int u = std::clamp(static_cast<int>(std::floor((c + 0.5 - box.x) / box.w * sw)), 0, sw - 1);
      if (box_mask(v, u)) out.set(r, c);
    }
  }
  return out;
}

}  // namespace pseudoforge
