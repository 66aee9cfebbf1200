#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "pseudoforge/grid.hpp"

namespace pseudoforge::noiselab {

struct Ellipse {
  double cx = 0, cy = 0;  // center in pixel coordinates
  double a = 1, b = 1;    // semi-axes
  double theta = 0;       // rotation of the a-axis, radians
};

struct Polygon {
  std::vector<std::pair<double, double>> vertices;  // (x, y)
};

using ShapeParams = std::variant<Ellipse, Polygon>;

enum class ShapeFamily { Ellipse, Polygon };
ShapeFamily parse_shape_family(const std::string& text);

/// Added to a run seed to get the noise seed, keeping the noise stream apart
/// from the shape stream.
inline constexpr std::uint64_t kNoiseSeedOffset = 0x9E3779B97F4A7C15ull;

struct NoiseParams {
  double q0 = 0.45;  // flip probability on the boundary
  double d0 = 1.5;   // decay length in pixels
};

struct SyntheticInstance {
  BitMask gt;
  BitMask noisy;
  std::uint64_t seed = 0;
  ShapeParams shape;
  NoiseParams noise{0.0, 1.0};
};

/// Filled shape with pixel (r, c) set when its center (c+0.5, r+0.5) is inside.
BitMask rasterize(const ShapeParams& shape, int height, int width);

/// n ground-truth instances on a grid x grid canvas, each covering 10-60% of
/// it. Instance i draws from an engine seeded with seed + i, so any subset
/// can be regenerated independently. `noisy` is a copy of `gt`.
std::vector<SyntheticInstance> gen_instances(int n, int grid, std::uint64_t seed,
                                             ShapeFamily family);

/// Flip each pixel independently with probability q0 * exp(-d / d0), d the
/// distance to the boundary of `gt`. d0 may be +infinity.
BitMask inject_boundary_noise(const BitMask& gt, double q0, double d0, std::uint64_t seed);

/// Applies inject_boundary_noise to every instance, seeding instance i with
/// noise_seed + i.
void apply_noise(std::vector<SyntheticInstance>& instances, const NoiseParams& noise,
                 std::uint64_t noise_seed);

struct DistanceAccuracyCurve {
  std::vector<double> bin_edges;      // num_bins + 1 normalized distances
  std::vector<double> mean_accuracy;  // per bin; 1.0 for empty bins
  std::vector<std::int64_t> counts;   // pixels per bin
  std::int64_t total_pixels = 0;
  double overall_accuracy = 1.0;
};

/// Pixel correctness inside each instance's ground-truth box, bucketed by
/// distance to the ground-truth boundary divided by the box diagonal.
DistanceAccuracyCurve accuracy_vs_distance(const std::vector<SyntheticInstance>& instances,
                                           int num_bins);

struct SizeIouCurve {
  std::vector<int> sizes;
  std::vector<double> mask_iou;
  std::vector<double> boundary_iou;
  std::vector<int> band;  // boundary band used at each size
};

/// Crop gt and noisy to the gt box, downsample both to s x s and average the
/// IoUs. band <= 0 selects the 2%-of-diagonal default at each size.
SizeIouCurve iou_vs_size(const std::vector<SyntheticInstance>& instances,
                         const std::vector<int>& sizes, double band);

struct BpmProfile {
  // Weight vs integer distance bin floor(d), the last bin absorbing the tail.
  std::vector<double> distance;
  std::vector<double> mean_weight;
  std::vector<std::int64_t> distance_counts;
  // Accuracy vs equal-population weight quantile bins (ranked by weight).
  std::vector<double> quantile_mean_weight;
  std::vector<double> quantile_accuracy;
  std::vector<std::int64_t> quantile_counts;
};

/// Smooth each noisy mask with a radius-`radius` box filter as a stand-in for
/// a network's sigmoid output, compute the BPM and aggregate it against
/// distance to the gt boundary and against pixel correctness.
BpmProfile bpm_profile(const std::vector<SyntheticInstance>& instances, int radius,
                       double floor, int max_distance = 16, int num_quantiles = 10);

}  // namespace pseudoforge::noiselab
