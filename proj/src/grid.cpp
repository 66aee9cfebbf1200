#include "pseudoforge/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pseudoforge {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::InvalidThreshold: return "InvalidThreshold";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NoBoundary: return "NoBoundary";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::NoRetainedDetections: return "NoRetainedDetections";
    case ErrorCode::UnknownImage: return "UnknownImage";
    case ErrorCode::EmptyBox: return "EmptyBox";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::ImageSetMismatch: return "ImageSetMismatch";
    case ErrorCode::IoError: return "IoError";
  }
  return "UnknownError";
}

BitMask::BitMask(int height, int width, std::vector<std::uint8_t> bits)
    : bits_(height, width, std::move(bits)) {
  for (auto& b : bits_.values()) b = b ? 1 : 0;
}

std::size_t BitMask::count() const noexcept {
  auto b = bits();
  return static_cast<std::size_t>(std::accumulate(b.begin(), b.end(), std::size_t{0}));
}

ProbMask::ProbMask(int height, int width, double fill) : grid_(height, width, fill) {
  validate();
}

ProbMask::ProbMask(int height, int width, std::vector<double> values)
    : grid_(height, width, std::move(values)) {
  validate();
}

ProbMask::ProbMask(RealGrid grid) : grid_(std::move(grid)) { validate(); }

void ProbMask::validate() const {
  for (double v : grid_.values()) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "probability values must lie in [0,1]");
    }
  }
}

PixelRegion box_pixel_region(const Box& box, int image_height, int image_width) {
  // Pixel c is inside when its center c+0.5 lies in [x, x+w).
  auto first = [](double lo) { return static_cast<int>(std::ceil(lo - 0.5)); };
  PixelRegion r;
  r.col0 = std::clamp(first(box.x), 0, image_width);
  r.col1 = std::clamp(first(box.x + box.w), 0, image_width);
  r.row0 = std::clamp(first(box.y), 0, image_height);
  r.row1 = std::clamp(first(box.y + box.h), 0, image_height);
  return r;
}

Box tight_box(const BitMask& mask) {
  int r0 = mask.height(), r1 = -1, c0 = mask.width(), c1 = -1;
  for (int r = 0; r < mask.height(); ++r) {
    for (int c = 0; c < mask.width(); ++c) {
      if (mask(r, c)) {
        r0 = std::min(r0, r);
        r1 = std::max(r1, r);
        c0 = std::min(c0, c);
        c1 = std::max(c1, c);
      }
    }
  }
  if (r1 < 0) return Box{};
  return Box{static_cast<double>(c0), static_cast<double>(r0), static_cast<double>(c1 - c0 + 1),
             static_cast<double>(r1 - r0 + 1)};
}

}  // namespace pseudoforge
