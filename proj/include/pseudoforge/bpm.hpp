#pragma once

#include "pseudoforge/grid.hpp"
#include "pseudoforge/mask_ops.hpp"

namespace pseudoforge {

/// Default lower bound on a boundary-preserving weight.
inline constexpr double kDefaultBpmFloor = 0.05;
/// Logits are clipped to [-kLogitClip, kLogitClip] inside the BCE.
inline constexpr double kLogitClip = 30.0;

/// Per-pixel mask-loss weights. Mean exactly 1 (to rounding) and every
/// weight at least the configured floor.
class BpmMap {
 public:
  BpmMap() = default;
  BpmMap(RealGrid weights, double floor) : weights_(std::move(weights)), floor_(floor) {}

  /// All-ones weights; reduces weighted_bce to the plain mean BCE.
  static BpmMap uniform(int height, int width) { return BpmMap(RealGrid(height, width, 1.0), 1.0); }

  int height() const noexcept { return weights_.height(); }
  int width() const noexcept { return weights_.width(); }
  double operator()(int r, int c) const { return weights_(r, c); }
  const RealGrid& weights() const noexcept { return weights_; }
  double floor() const noexcept { return floor_; }

 private:
  RealGrid weights_{1, 1, 1.0};
  double floor_ = 1.0;
};

/// 5-point Laplacian with replicate padding.
RealGrid laplacian(const RealGrid& p);
inline RealGrid laplacian(const ProbMask& p) { return laplacian(p.grid()); }

/// Boundary-preserving map |lap(p)|, rescaled so that
/// weights = max(c * |lap(p)|, floor) has mean 1. A map with zero Laplacian
/// everywhere yields uniform unit weights. `floor` must lie in (0, 1].
BpmMap bpm_from_prob(const ProbMask& p, double floor = kDefaultBpmFloor);

struct BceResult {
  double loss = 0;
  RealGrid grad;
};

/// Weighted mean binary cross-entropy on logits. The weights are constants:
/// grad = w * (sigmoid(z) - y) / N. Throws DimensionMismatch or NonFinite.
BceResult weighted_bce(const RealGrid& logits, const BitMask& target, const RealGrid& weights);
inline BceResult weighted_bce(const RealGrid& logits, const BitMask& target, const BpmMap& bpm) {
  return weighted_bce(logits, target, bpm.weights());
}

/// Targets for the dual-resolution mask head.
struct NtmTargets {
  BitMask high;
  BitMask low;
};

/// Crop `gt_full` to `box`, downsample to high_side, then downsample that to
/// low_side. Throws EmptyBox when the box misses the image.
NtmTargets make_ntm_targets(const BitMask& gt_full, const Box& box, int high_side = kHighResSide,
                            int low_side = kLowResSide);

struct MaskLossReport {
  double total = 0;
  double high_res_term = 0;
  double low_res_term = 0;
  double alpha = 1.0;
  /// d total / d logits_high.
  RealGrid grad_high;
  /// d total / d logits_low (already scaled by alpha).
  RealGrid grad_low;
};

/// total = bce_w(high; bpm) + alpha * bce(low; uniform weights).
MaskLossReport ntm_loss(const RealGrid& logits_high, const RealGrid& logits_low,
                        const NtmTargets& targets, const BpmMap& bpm, double alpha = 1.0);

double sigmoid(double z);
/// log(p / (1 - p)) with p clamped away from {0, 1} so the result stays
/// within the logit clip.
double logit(double p);

}  // namespace pseudoforge
