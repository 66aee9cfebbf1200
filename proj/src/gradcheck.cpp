#include "pseudoforge/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace pseudoforge {

double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-10});
  return std::abs(analytic - numeric) / scale;
}

double check_bce_gradient(const RealGrid& logits, const BitMask& target, const RealGrid& weights,
                          double step) {
  const auto analytic = weighted_bce(logits, target, weights).grad;
  RealGrid z = logits;
  double worst = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double saved = z.values()[i];
    z.values()[i] = saved + step;
    const double up = weighted_bce(z, target, weights).loss;
    z.values()[i] = saved - step;
    const double down = weighted_bce(z, target, weights).loss;
    z.values()[i] = saved;
    worst = std::max(worst, relative_error(analytic.values()[i], (up - down) / (2 * step)));
  }
  return worst;
}

double check_ntm_gradient(const RealGrid& logits_high, const RealGrid& logits_low,
                          const NtmTargets& targets, const BpmMap& bpm, double alpha,
                          double step) {
  const auto report = ntm_loss(logits_high, logits_low, targets, bpm, alpha);
  RealGrid high = logits_high, low = logits_low;
  double worst = 0;
  auto probe = [&](RealGrid& grid, const RealGrid& analytic) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double saved = grid.values()[i];
      grid.values()[i] = saved + step;
      const double up = ntm_loss(high, low, targets, bpm, alpha).total;
      grid.values()[i] = saved - step;
      const double down = ntm_loss(high, low, targets, bpm, alpha).total;
      grid.values()[i] = saved;
      worst = std::max(worst, relative_error(analytic.values()[i], (up - down) / (2 * step)));
    }
  };
  probe(high, report.grad_high);
  probe(low, report.grad_low);
  return worst;
}

}  // namespace pseudoforge
