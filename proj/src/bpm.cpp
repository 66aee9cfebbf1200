#include "pseudoforge/bpm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "pseudoforge/parallel.hpp"

namespace pseudoforge {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double logit(double p) {
  const double lo = sigmoid(-kLogitClip), hi = sigmoid(kLogitClip);
  const double q = std::clamp(p, lo, hi);
  return std::log(q) - std::log1p(-q);
}

RealGrid laplacian(const RealGrid& p) {
  const int h = p.height(), w = p.width();
  RealGrid out(h, w, 0.0);
#pragma omp parallel for schedule(static) if (p.size() >= kParallelPixelThreshold)
  for (int r = 0; r < h; ++r) {
    const int up = std::max(r - 1, 0), down = std::min(r + 1, h - 1);
    for (int c = 0; c < w; ++c) {
      const int left = std::max(c - 1, 0), right = std::min(c + 1, w - 1);
      out(r, c) = p(up, c) + p(down, c) + p(r, left) + p(r, right) - 4.0 * p(r, c);
    }
  }
  return out;
}

BpmMap bpm_from_prob(const ProbMask& p, double floor) {
  if (!(floor > 0.0 && floor <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "BPM floor must lie in (0,1]");
  }
  RealGrid weights = laplacian(p);
  for (auto& v : weights.values()) v = std::abs(v);

  auto raw = weights.values();
  const double total = std::accumulate(raw.begin(), raw.end(), 0.0);
  if (!(total > 0.0) || floor == 1.0) {
    return BpmMap(RealGrid(p.height(), p.width(), 1.0), floor);
  }

  // Find the scale c with mean(max(c * raw, floor)) == 1. With the values
  // sorted ascending, exactly the first k are floored for some k.
  std::vector<double> sorted(raw.begin(), raw.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  std::vector<double> suffix(n + 1, 0.0);
  for (std::size_t i = n; i-- > 0;) suffix[i] = suffix[i + 1] + sorted[i];

  double scale = double(n) / total;
  for (std::size_t k = 0; k < n; ++k) {
    if (!(suffix[k] > 0.0)) break;
    const double c = (double(n) - floor * double(k)) / suffix[k];
    const bool below_ok = k == 0 || c * sorted[k - 1] < floor;
    if (below_ok && c * sorted[k] >= floor) {
      scale = c;
      break;
    }
  }
  for (auto& v : weights.values()) v = std::max(scale * v, floor);
  return BpmMap(std::move(weights), floor);
}

BceResult weighted_bce(const RealGrid& logits, const BitMask& target, const RealGrid& weights) {
  if (!logits.same_shape(target) || !logits.same_shape(weights)) {
    throw Error(ErrorCode::DimensionMismatch, "logits, target and weights must share dimensions");
  }
  for (double z : logits.values()) {
    if (!std::isfinite(z)) throw Error(ErrorCode::NonFinite, "non-finite logit");
  }
  const int h = logits.height(), w = logits.width();
  const double n = double(logits.size());
  BceResult result{0.0, RealGrid(h, w, 0.0)};
  // Row partials summed in row order keep the total independent of the
  // thread count.
  std::vector<double> row_loss(static_cast<std::size_t>(h), 0.0);
#pragma omp parallel for schedule(static) if (logits.size() >= kParallelPixelThreshold)
  for (int r = 0; r < h; ++r) {
    double acc = 0.0;
    for (int c = 0; c < w; ++c) {
      const double z = std::clamp(logits(r, c), -kLogitClip, kLogitClip);
      const double y = target(r, c) ? 1.0 : 0.0;
      const double wt = weights(r, c);
      acc += wt * (std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z))));
      result.grad(r, c) = wt * (sigmoid(z) - y) / n;
    }
    row_loss[static_cast<std::size_t>(r)] = acc;
  }
  result.loss = std::accumulate(row_loss.begin(), row_loss.end(), 0.0) / n;
  return result;
}

NtmTargets make_ntm_targets(const BitMask& gt_full, const Box& box, int high_side, int low_side) {
  if (high_side < 1 || low_side < 1 || low_side > high_side) {
    throw Error(ErrorCode::InvalidArgument, "need 1 <= low_side <= high_side");
  }
  const PixelRegion region = box_pixel_region(box, gt_full.height(), gt_full.width());
  if (region.empty()) throw Error(ErrorCode::EmptyBox, "box does not intersect the image");
  NtmTargets t;
  t.high = downsample_mask(crop(gt_full, region), high_side);
  t.low = downsample_mask(t.high, low_side);
  return t;
}

MaskLossReport ntm_loss(const RealGrid& logits_high, const RealGrid& logits_low,
                        const NtmTargets& targets, const BpmMap& bpm, double alpha) {
  if (!std::isfinite(alpha)) throw Error(ErrorCode::NonFinite, "alpha must be finite");
  if (!logits_high.same_shape(targets.high) || !logits_low.same_shape(targets.low) ||
      !logits_high.same_shape(bpm.weights())) {
    throw Error(ErrorCode::DimensionMismatch, "logit grids must match their targets and the BPM");
  }
  MaskLossReport report;
  report.alpha = alpha;
  auto high = weighted_bce(logits_high, targets.high, bpm);
  auto low = weighted_bce(logits_low, targets.low,
                          RealGrid(logits_low.height(), logits_low.width(), 1.0));
  report.high_res_term = high.loss;
  report.low_res_term = low.loss;
  report.total = high.loss + alpha * low.loss;
  for (auto& g : low.grad.values()) g *= alpha;
  report.grad_high = std::move(high.grad);
  report.grad_low = std::move(low.grad);
  return report;
}

}  // namespace pseudoforge
