#include "pseudoforge/noiselab.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>

#include "pseudoforge/bpm.hpp"
#include "pseudoforge/mask_ops.hpp"
#include "pseudoforge/metrics.hpp"

namespace pseudoforge::noiselab {

namespace {

using Engine = std::mt19937_64;

// Uniform [0,1) from the top 53 bits; unlike std::uniform_real_distribution
// the mapping is fixed across standard library implementations.
double unit(Engine& eng) { return double(eng() >> 11) * 0x1.0p-53; }
double uniform(Engine& eng, double lo, double hi) { return lo + (hi - lo) * unit(eng); }

constexpr double kMinCoverage = 0.10;
constexpr double kMaxCoverage = 0.60;

bool inside(const Ellipse& e, double x, double y) {
  const double dx = x - e.cx, dy = y - e.cy;
  const double ct = std::cos(e.theta), st = std::sin(e.theta);
  const double u = (dx * ct + dy * st) / e.a;
  const double v = (-dx * st + dy * ct) / e.b;
  return u * u + v * v <= 1.0;
}

bool inside(const Polygon& poly, double x, double y) {
  bool in = false;
  const auto& v = poly.vertices;
  for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
    const auto [xi, yi] = v[i];
    const auto [xj, yj] = v[j];
    if ((yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi) in = !in;
  }
  return in;
}

std::optional<Ellipse> sample_ellipse(Engine& eng, int grid) {
  const double g = grid;
  const double coverage = uniform(eng, 0.12, 0.55);
  const double aspect = uniform(eng, 0.45, 1.0);
  Ellipse e;
  e.a = std::sqrt(coverage * g * g / (std::numbers::pi * aspect));
  e.b = e.a * aspect;
  e.theta = uniform(eng, 0.0, std::numbers::pi);
  const double ct = std::cos(e.theta), st = std::sin(e.theta);
  const double ex = std::sqrt(e.a * e.a * ct * ct + e.b * e.b * st * st);
  const double ey = std::sqrt(e.a * e.a * st * st + e.b * e.b * ct * ct);
  if (2 * ex + 2 > g || 2 * ey + 2 > g) return std::nullopt;
  e.cx = uniform(eng, ex + 1, g - ex - 1);
  e.cy = uniform(eng, ey + 1, g - ey - 1);
  return e;
}

std::optional<Polygon> sample_polygon(Engine& eng, int grid) {
  const double g = grid;
  const int k = 5 + static_cast<int>(unit(eng) * 6);
  const double radius = uniform(eng, 0.25 * g, 0.45 * g);
  const double phase = uniform(eng, 0.0, 2 * std::numbers::pi);
  // Star-shaped around the origin with strictly increasing angles: simple.
  std::vector<std::pair<double, double>> offsets;
  double minx = 0, maxx = 0, miny = 0, maxy = 0;
  for (int j = 0; j < k; ++j) {
    const double ang = phase + 2 * std::numbers::pi * (j + uniform(eng, -0.3, 0.3)) / k;
    const double r = radius * uniform(eng, 0.6, 1.0);
    const double x = r * std::cos(ang), y = r * std::sin(ang);
    offsets.emplace_back(x, y);
    minx = std::min(minx, x);
    maxx = std::max(maxx, x);
    miny = std::min(miny, y);
    maxy = std::max(maxy, y);
  }
  if (maxx - minx + 2 > g || maxy - miny + 2 > g) return std::nullopt;
  const double cx = uniform(eng, 1 - minx, g - 1 - maxx);
  const double cy = uniform(eng, 1 - miny, g - 1 - maxy);
  Polygon poly;
  for (auto [x, y] : offsets) poly.vertices.emplace_back(cx + x, cy + y);
  return poly;
}

}  // namespace

ShapeFamily parse_shape_family(const std::string& text) {
  if (text == "ellipse") return ShapeFamily::Ellipse;
  if (text == "polygon") return ShapeFamily::Polygon;
  throw Error(ErrorCode::InvalidArgument, "unknown shape family '" + text + "'");
}

BitMask rasterize(const ShapeParams& shape, int height, int width) {
  BitMask mask(height, width);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const double x = c + 0.5, y = r + 0.5;
      const bool in = std::visit([&](const auto& s) { return inside(s, x, y); }, shape);
      if (in) mask.set(r, c);
    }
  }
  return mask;
}

std::vector<SyntheticInstance> gen_instances(int n, int grid, std::uint64_t seed,
                                             ShapeFamily family) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "need at least one instance");
  if (grid < 16) throw Error(ErrorCode::InvalidArgument, "grid must be at least 16");
  std::vector<SyntheticInstance> out(static_cast<std::size_t>(n));
  const double area = double(grid) * grid;

#pragma omp parallel for schedule(dynamic, 4)
  for (int i = 0; i < n; ++i) {
    SyntheticInstance& inst = out[static_cast<std::size_t>(i)];
    inst.seed = seed + static_cast<std::uint64_t>(i);
    Engine eng(inst.seed);
    for (;;) {
      std::optional<ShapeParams> shape;
      if (family == ShapeFamily::Ellipse) {
        if (auto e = sample_ellipse(eng, grid)) shape = *e;
      } else if (auto p = sample_polygon(eng, grid)) {
        shape = *p;
      }
      if (!shape) continue;
      BitMask mask = rasterize(*shape, grid, grid);
      const double coverage = double(mask.count()) / area;
      if (coverage < kMinCoverage || coverage > kMaxCoverage) continue;
      inst.shape = std::move(*shape);
      inst.gt = mask;
      inst.noisy = std::move(mask);
      break;
    }
  }
  return out;
}

BitMask inject_boundary_noise(const BitMask& gt, double q0, double d0, std::uint64_t seed) {
  if (!(q0 >= 0.0 && q0 <= 1.0)) throw Error(ErrorCode::InvalidArgument, "q0 must lie in [0,1]");
  if (!(d0 > 0.0)) throw Error(ErrorCode::InvalidArgument, "d0 must be positive");
  const DistanceField dist = distance_to_boundary(gt);
  BitMask noisy = gt;
  Engine eng(seed);
  auto bits = noisy.bits();
  auto d = dist.values();
  for (std::size_t i = 0; i < bits.size(); ++i) {
    const double u = unit(eng);
    if (u < q0 * std::exp(-d[i] / d0)) bits[i] ^= 1;
  }
  return noisy;
}

void apply_noise(std::vector<SyntheticInstance>& instances, const NoiseParams& noise,
                 std::uint64_t noise_seed) {
  if (!(noise.q0 >= 0.0 && noise.q0 <= 1.0) || !(noise.d0 > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "noise needs q0 in [0,1] and d0 > 0");
  }
  for (const auto& inst : instances) {
    if (inst.gt.empty()) throw Error(ErrorCode::NoBoundary, "instance without foreground");
  }
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(instances.size()); ++i) {
    auto& inst = instances[static_cast<std::size_t>(i)];
    inst.noise = noise;
    inst.noisy = inject_boundary_noise(inst.gt, noise.q0, noise.d0,
                                       noise_seed + static_cast<std::uint64_t>(i));
  }
}

DistanceAccuracyCurve accuracy_vs_distance(const std::vector<SyntheticInstance>& instances,
                                           int num_bins) {
  if (instances.empty()) throw Error(ErrorCode::InvalidArgument, "no instances");
  if (num_bins < 1) throw Error(ErrorCode::InvalidArgument, "need at least one bin");

  struct Sample {
    double distance;
    bool correct;
  };
  std::vector<std::vector<Sample>> per_instance(instances.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(instances.size()); ++i) {
    const auto& inst = instances[static_cast<std::size_t>(i)];
    if (inst.gt.empty()) continue;
    const Box box = tight_box(inst.gt);
    const double diag = std::hypot(box.w, box.h);
    const PixelRegion region = box_pixel_region(box, inst.gt.height(), inst.gt.width());
    const DistanceField dist = distance_to_boundary(inst.gt);
    auto& samples = per_instance[static_cast<std::size_t>(i)];
    for (int r = region.row0; r < region.row1; ++r) {
      for (int c = region.col0; c < region.col1; ++c) {
        samples.push_back({dist(r, c) / diag, inst.gt(r, c) == inst.noisy(r, c)});
      }
    }
  }

  double max_d = 0;
  for (const auto& s : per_instance) {
    for (const auto& x : s) max_d = std::max(max_d, x.distance);
  }
  DistanceAccuracyCurve curve;
  curve.bin_edges.resize(static_cast<std::size_t>(num_bins) + 1);
  for (int b = 0; b <= num_bins; ++b) curve.bin_edges[static_cast<std::size_t>(b)] = max_d * b / num_bins;
  curve.counts.assign(static_cast<std::size_t>(num_bins), 0);
  std::vector<std::int64_t> correct(static_cast<std::size_t>(num_bins), 0);
  std::int64_t total_correct = 0;
  for (const auto& s : per_instance) {
    for (const auto& x : s) {
      int b = max_d > 0 ? static_cast<int>(x.distance / max_d * num_bins) : 0;
      b = std::clamp(b, 0, num_bins - 1);
      ++curve.counts[static_cast<std::size_t>(b)];
      correct[static_cast<std::size_t>(b)] += x.correct ? 1 : 0;
      total_correct += x.correct ? 1 : 0;
      ++curve.total_pixels;
    }
  }
  curve.mean_accuracy.resize(static_cast<std::size_t>(num_bins));
  for (std::size_t b = 0; b < curve.counts.size(); ++b) {
    curve.mean_accuracy[b] = curve.counts[b] ? double(correct[b]) / double(curve.counts[b]) : 1.0;
  }
  curve.overall_accuracy =
      curve.total_pixels ? double(total_correct) / double(curve.total_pixels) : 1.0;
  return curve;
}

SizeIouCurve iou_vs_size(const std::vector<SyntheticInstance>& instances,
                         const std::vector<int>& sizes, double band) {
  if (instances.empty()) throw Error(ErrorCode::InvalidArgument, "no instances");
  if (sizes.empty()) throw Error(ErrorCode::InvalidArgument, "no sizes");
  for (int s : sizes) {
    if (s < 4) throw Error(ErrorCode::InvalidArgument, "mask sizes must be >= 4");
  }
  for (const auto& inst : instances) {
    if (inst.gt.empty()) throw Error(ErrorCode::NoBoundary, "instance without foreground");
    if (inst.gt.height() != inst.noisy.height() || inst.gt.width() != inst.noisy.width()) {
      throw Error(ErrorCode::DimensionMismatch, "gt and noisy differ in size");
    }
  }
  SizeIouCurve curve;
  curve.sizes = sizes;
  for (int s : sizes) {
    curve.band.push_back(band > 0 ? static_cast<int>(std::lround(band)) : default_boundary_band(s, s));
  }

  const std::size_t ns = sizes.size();
  std::vector<double> miou(instances.size() * ns, 0.0), biou(instances.size() * ns, 0.0);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(instances.size()); ++i) {
    const auto& inst = instances[static_cast<std::size_t>(i)];
    const PixelRegion region = box_pixel_region(tight_box(inst.gt), inst.gt.height(), inst.gt.width());
    const BitMask gt = crop(inst.gt, region);
    const BitMask noisy = crop(inst.noisy, region);
    for (std::size_t k = 0; k < ns; ++k) {
      const BitMask g = downsample_mask(gt, sizes[k]);
      const BitMask p = downsample_mask(noisy, sizes[k]);
      const double d = band > 0 ? band : double(curve.band[k]);
      miou[static_cast<std::size_t>(i) * ns + k] = mask_iou(g, p);
      biou[static_cast<std::size_t>(i) * ns + k] = boundary_iou(g, p, d);
    }
  }
  curve.mask_iou.assign(ns, 0.0);
  curve.boundary_iou.assign(ns, 0.0);
  for (std::size_t i = 0; i < instances.size(); ++i) {
    for (std::size_t k = 0; k < ns; ++k) {
      curve.mask_iou[k] += miou[i * ns + k];
      curve.boundary_iou[k] += biou[i * ns + k];
    }
  }
  for (std::size_t k = 0; k < ns; ++k) {
    curve.mask_iou[k] /= double(instances.size());
    curve.boundary_iou[k] /= double(instances.size());
  }
  return curve;
}

BpmProfile bpm_profile(const std::vector<SyntheticInstance>& instances, int radius, double floor,
                       int max_distance, int num_quantiles) {
  if (instances.empty()) throw Error(ErrorCode::InvalidArgument, "no instances");
  if (max_distance < 1 || num_quantiles < 1) {
    throw Error(ErrorCode::InvalidArgument, "need positive bin counts");
  }
  struct Sample {
    double weight;
    int bin;
    bool correct;
  };
  std::vector<std::vector<Sample>> per_instance(instances.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(instances.size()); ++i) {
    const auto& inst = instances[static_cast<std::size_t>(i)];
    if (inst.gt.empty()) continue;
    const BpmMap bpm = bpm_from_prob(box_smooth(inst.noisy, radius), floor);
    const DistanceField dist = distance_to_boundary(inst.gt);
    auto& samples = per_instance[static_cast<std::size_t>(i)];
    samples.reserve(inst.gt.size());
    for (int r = 0; r < inst.gt.height(); ++r) {
      for (int c = 0; c < inst.gt.width(); ++c) {
        const int bin = std::min(static_cast<int>(std::floor(dist(r, c))), max_distance);
        samples.push_back({bpm(r, c), bin, inst.gt(r, c) == inst.noisy(r, c)});
      }
    }
  }

  BpmProfile profile;
  const std::size_t nd = static_cast<std::size_t>(max_distance) + 1;
  profile.distance.resize(nd);
  profile.mean_weight.assign(nd, 0.0);
  profile.distance_counts.assign(nd, 0);
  for (std::size_t b = 0; b < nd; ++b) profile.distance[b] = double(b);

  std::vector<Sample> pooled;
  for (const auto& s : per_instance) pooled.insert(pooled.end(), s.begin(), s.end());
  for (const auto& x : pooled) {
    profile.mean_weight[static_cast<std::size_t>(x.bin)] += x.weight;
    ++profile.distance_counts[static_cast<std::size_t>(x.bin)];
  }
  for (std::size_t b = 0; b < nd; ++b) {
    if (profile.distance_counts[b]) profile.mean_weight[b] /= double(profile.distance_counts[b]);
  }

  std::stable_sort(pooled.begin(), pooled.end(),
                   [](const Sample& a, const Sample& b) { return a.weight < b.weight; });
  const std::size_t nq = static_cast<std::size_t>(num_quantiles);
  profile.quantile_mean_weight.assign(nq, 0.0);
  profile.quantile_accuracy.assign(nq, 0.0);
  profile.quantile_counts.assign(nq, 0);
  const std::size_t total = pooled.size();
  for (std::size_t q = 0; q < nq; ++q) {
    const std::size_t lo = q * total / nq, hi = (q + 1) * total / nq;
    double wsum = 0;
    std::int64_t ok = 0;
    for (std::size_t k = lo; k < hi; ++k) {
      wsum += pooled[k].weight;
      ok += pooled[k].correct ? 1 : 0;
    }
    const auto n = static_cast<std::int64_t>(hi - lo);
    profile.quantile_counts[q] = n;
    profile.quantile_mean_weight[q] = n ? wsum / double(n) : 0.0;
    profile.quantile_accuracy[q] = n ? double(ok) / double(n) : 1.0;
  }
  return profile;
}

}  // namespace pseudoforge::noiselab
