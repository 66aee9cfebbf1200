#pragma once

#include "pseudoforge/bpm.hpp"

namespace pseudoforge {

inline constexpr double kGradCheckStep = 1e-5;
inline constexpr double kGradCheckTolerance = 1e-5;

/// |analytic - numeric| / max(|analytic|, |numeric|, 1e-10)
double relative_error(double analytic, double numeric);

/// Largest relative error between the weighted_bce gradient and central
/// differences of its loss.
double check_bce_gradient(const RealGrid& logits, const BitMask& target, const RealGrid& weights,
                          double step = kGradCheckStep);

/// Same for ntm_loss, over both logit grids.
double check_ntm_gradient(const RealGrid& logits_high, const RealGrid& logits_low,
                          const NtmTargets& targets, const BpmMap& bpm, double alpha,
                          double step = kGradCheckStep);

}  // namespace pseudoforge
