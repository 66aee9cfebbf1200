#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "pseudoforge/bpm.hpp"
#include "pseudoforge/mask_ops.hpp"

namespace pseudoforge {

/// Pipeline settings. Loaded from a plain `key = value` file; '#' starts a
/// comment, unknown keys and out-of-range values raise ConfigError.
struct PipelineConfig {
  int mask_side = kHighResSide;
  int low_side = kLowResSide;
  double bpm_floor = kDefaultBpmFloor;
  double low_branch_weight = 1.0;
  /// Boundary band in pixels; 0 means 2% of the image diagonal.
  int boundary_band = 0;
  double test_pixel_threshold = kTestPixelThreshold;
  std::uint64_t rng_seed = 0;
  double noise_q0 = 0.45;
  double noise_d0 = 1.5;
  /// Accepted TTA transforms ("identity", "hflip", "scale", "scale:<s>").
  std::vector<std::string> tta{"identity", "hflip", "scale"};

  // Synthetic noise analysis.
  int num_instances = 200;
  int grid = 64;
  std::string shape_family = "ellipse";
  int distance_bins = 8;
  std::vector<int> sizes{7, 14, 28, 56};
  int smoothing_radius = 1;
  int profile_max_distance = 16;
  int weight_quantiles = 10;

  void validate() const;
  nlohmann::json snapshot() const;
};

/// Parses config text; `origin` prefixes diagnostics.
PipelineConfig parse_config(const std::string& text, const std::string& origin = "config");
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace pseudoforge
