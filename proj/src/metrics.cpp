#include "pseudoforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "pseudoforge/mask_ops.hpp"

namespace pseudoforge {

namespace {

void require_same_shape(const BitMask& a, const BitMask& b) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw Error(ErrorCode::DimensionMismatch, "masks differ in size");
  }
}

double iou_of(const BitMask& a, const BitMask& b) {
  auto x = a.bits(), y = b.bits();
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    inter += (x[i] & y[i]);
    uni += (x[i] | y[i]);
  }
  return uni == 0 ? 1.0 : double(inter) / double(uni);
}

}  // namespace

double mask_iou(const BitMask& a, const BitMask& b) {
  require_same_shape(a, b);
  return iou_of(a, b);
}

int default_boundary_band(int height, int width) {
  const double diag = std::hypot(double(height), double(width));
  return std::max(1, static_cast<int>(std::lround(0.02 * diag)));
}

BitMask boundary_band(const BitMask& mask, double d) {
  BitMask band(mask.height(), mask.width());
  if (mask.empty()) return band;
  const DistanceField dist = distance_to_boundary(mask);
  auto src = mask.bits();
  auto out = band.bits();
  auto dv = dist.values();
  for (std::size_t i = 0; i < src.size(); ++i) out[i] = (src[i] && dv[i] <= d) ? 1 : 0;
  return band;
}

double boundary_iou(const BitMask& a, const BitMask& b, double d) {
  require_same_shape(a, b);
  if (!(d > 0)) throw Error(ErrorCode::InvalidArgument, "boundary band must be positive");
  return iou_of(boundary_band(a, d), boundary_band(b, d));
}

Transform parse_transform(const std::string& text) {
  if (text == "identity") return Transform::identity();
  if (text == "hflip") return Transform::flip();
  if (text.rfind("scale:", 0) == 0) {
    const std::string num = text.substr(6);
    char* end = nullptr;
    const double s = std::strtod(num.c_str(), &end);
    if (!num.empty() && end == num.c_str() + num.size() && std::isfinite(s) && s > 0) {
      return Transform::scaled(s);
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown transform '" + text + "'");
}

std::string to_string(const Transform& t) {
  switch (t.kind) {
    case TransformKind::Identity: return "identity";
    case TransformKind::HFlip: return "hflip";
    case TransformKind::Scale: {
      char buf[64];
      std::snprintf(buf, sizeof buf, "scale:%.9g", t.scale);
      return buf;
    }
  }
  return "identity";
}

ProbMask tta_fuse(const std::vector<ProbMask>& masks, const std::vector<Transform>& transforms) {
  if (masks.empty() || masks.size() != transforms.size()) {
    throw Error(ErrorCode::InvalidArgument, "need one transform per probability map");
  }
  std::vector<ProbMask> restored;
  restored.reserve(masks.size());
  for (std::size_t i = 0; i < masks.size(); ++i) {
    const Transform& t = transforms[i];
    switch (t.kind) {
      case TransformKind::Identity: restored.push_back(masks[i]); break;
      case TransformKind::HFlip: restored.push_back(hflip(masks[i])); break;
      case TransformKind::Scale: {
        const int h = std::max(1, static_cast<int>(std::lround(masks[i].height() / t.scale)));
        const int w = std::max(1, static_cast<int>(std::lround(masks[i].width() / t.scale)));
        restored.push_back(resample_bilinear(masks[i], h, w));
        break;
      }
    }
  }
  const int h = restored.front().height(), w = restored.front().width();
  RealGrid sum(h, w, 0.0);
  for (const auto& m : restored) {
    if (m.height() != h || m.width() != w) {
      throw Error(ErrorCode::DimensionMismatch, "restored TTA maps differ in size");
    }
    auto dst = sum.values();
    auto src = m.values();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
  }
  const double n = double(restored.size());
  for (auto& v : sum.values()) v = std::clamp(v / n, 0.0, 1.0);
  return ProbMask(std::move(sum));
}

}  // namespace pseudoforge
