// Acceptance checks. One PASS/FAIL line per criterion; exit status 1 when any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "pseudoforge/bpm.hpp"
#include "pseudoforge/config.hpp"
#include "pseudoforge/gradcheck.hpp"
#include "pseudoforge/mask_ops.hpp"
#include "pseudoforge/metrics.hpp"
#include "pseudoforge/noiselab.hpp"
#include "pseudoforge/rle.hpp"

using namespace pseudoforge;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and budgets.
constexpr int kSolverFixtures = 100;
constexpr double kSolverBudget = 5.0;
constexpr int kMatchingCases = 1000;
constexpr int kGradFixtures = 50;
constexpr double kGradTolerance = 1e-5;
constexpr double kGradBudget = 10.0;
// Logits beyond this saturate the sigmoid; the loss then rounds away the
// finite-difference signal.
constexpr double kLogitSpan = 4.0;
constexpr double kOverallAccuracy = 0.9;
constexpr double kNearFarGap = 0.15;
constexpr double kBoundaryGap = 0.01;
constexpr double kMaskSlack = 0.01;
constexpr double kCurveBudget = 60.0;
constexpr int kDipWindow = 3;
constexpr int kFarDistance = 6;
constexpr double kFarFraction = 0.25;
constexpr double kDistanceTolerance = 1e-9;

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("criterion %d %s: %s (%s; %.2f s)\n", id, name.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::int64_t labeled_count(const oracle::CalibFixture& f, CategoryId c) {
  auto it = f.stats.instances_per_category.find(c);
  return it == f.stats.instances_per_category.end() ? 0 : it->second;
}

Outcome solver_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 eng(1001);
  int mismatches = 0, pixel_checked = 0;
  for (int t = 0; t < kSolverFixtures; ++t) {
    // every other fixture quantizes probabilities to force ties
    const auto f = oracle::random_calib(eng, 6, t % 2 ? 0.05 : 0);
    const auto box = solve_box_thresholds(f.preds, f.stats, f.unlabeled);
    for (const auto& [c, ct] : box) {
      std::vector<double> scores;
      for (const auto& d : f.preds) {
        if (d.category_id == c) scores.push_back(d.score);
      }
      const auto want = oracle::box_sweep(scores, oracle::target_count(labeled_count(f, c), f.stats.num_images, f.unlabeled));
      if (ct.threshold != want.threshold || ct.kept != want.kept) ++mismatches;
    }
    const auto kept = retain_detections(f.preds, box);
    if (kept.empty()) continue;
    std::vector<double> pool;
    for (const auto& d : kept) pool.insert(pool.end(), d.mask.values().begin(), d.mask.values().end());
    ++pixel_checked;
    if (solve_pixel_threshold(kept, f.stats).threshold != oracle::pixel_sweep(pool, f.stats.fg_pixel_fraction)) {
      ++mismatches;
    }
  }
  const double secs = elapsed(t0);
  return {mismatches == 0 && secs < kSolverBudget,
          fmt("%d fixtures, %d pixel solves, %d mismatches, budget %.0f s", kSolverFixtures, pixel_checked, mismatches,
              kSolverBudget)};
}

Outcome distribution_matching() {
  std::mt19937_64 eng(2002);
  int count_fail = 0, ratio_fail = 0, ratio_checked = 0;
  for (int t = 0; t < kMatchingCases; ++t) {
    const auto f = oracle::random_calib(eng, oracle::uniform_int(eng, 1, 6));
    const auto set = calibrate(f.preds, f.stats, f.unlabeled);
    for (const auto& [c, ct] : set.box) {
      std::int64_t avail = 0, kept = 0;
      for (const auto& d : f.preds) {
        if (d.category_id != c) continue;
        ++avail;
        kept += d.score >= ct.threshold;
      }
      const auto want = std::min(oracle::target_count(labeled_count(f, c), f.stats.num_images, f.unlabeled), avail);
      if (kept != want) ++count_fail;
    }
    if (set.pixel_degenerate) continue;
    ++ratio_checked;
    if (std::abs(set.pixel.achieved_fraction - f.stats.fg_pixel_fraction) > 1.0 / double(set.pixel.pooled)) ++ratio_fail;
  }
  return {count_fail == 0 && ratio_fail == 0,
          fmt("%d cases, count failures %d, ratio failures %d of %d", kMatchingCases, count_fail, ratio_fail,
              ratio_checked)};
}

Outcome gradient_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 eng(3003);
  double worst = 0;
  for (int t = 0; t < kGradFixtures; ++t) {
    const int h = oracle::uniform_int(eng, 1, 8), w = oracle::uniform_int(eng, 1, 8);
    RealGrid z(h, w), weights(h, w);
    for (auto& v : z.values()) v = kLogitSpan * (2 * oracle::unit(eng) - 1);
    for (auto& v : weights.values()) v = 0.05 + 4 * oracle::unit(eng);
    const BitMask y = oracle::random_mask(eng, h, w, 0.5);
    worst = std::max(worst, check_bce_gradient(z, y, weights, kGradCheckStep));

    const int n = oracle::uniform_int(eng, 1, 8), m = oracle::uniform_int(eng, 1, n);
    RealGrid zh(n, n), zl(m, m), p(n, n);
    for (auto& v : zh.values()) v = kLogitSpan * (2 * oracle::unit(eng) - 1);
    for (auto& v : zl.values()) v = kLogitSpan * (2 * oracle::unit(eng) - 1);
    for (auto& v : p.values()) v = oracle::unit(eng);
    const BitMask yh = oracle::random_mask(eng, n, n, 0.5);
    const NtmTargets targets{yh, downsample_mask(yh, m)};
    worst = std::max(worst, check_ntm_gradient(zh, zl, targets, bpm_from_prob(ProbMask(p)), 2 * oracle::unit(eng),
                                               kGradCheckStep));
  }
  const double secs = elapsed(t0);
  return {worst <= kGradTolerance && secs < kGradBudget,
          fmt("%d fixtures, |z| <= %.0f, step %.0e, max rel. error %.3g <= %.0e", kGradFixtures, kLogitSpan, kGradCheckStep, worst, kGradTolerance)};
}

struct Population {
  std::vector<noiselab::SyntheticInstance> instances;
  PipelineConfig cfg;
};

const Population& default_population() {
  static const Population pop = [] {
    Population p;
    auto& cfg = p.cfg;
    p.instances = noiselab::gen_instances(cfg.num_instances, cfg.grid, cfg.rng_seed,
                                          noiselab::parse_shape_family(cfg.shape_family));
    noiselab::apply_noise(p.instances, {cfg.noise_q0, cfg.noise_d0}, cfg.rng_seed + noiselab::kNoiseSeedOffset);
    return p;
  }();
  return pop;
}

Outcome accuracy_trend() {
  const auto& pop = default_population();
  const auto acc = noiselab::accuracy_vs_distance(pop.instances, pop.cfg.distance_bins);
  bool monotone = true;
  for (std::size_t b = 2; b < acc.mean_accuracy.size(); ++b) {
    if (acc.counts[b] > 0 && acc.mean_accuracy[b] < acc.mean_accuracy[b - 1]) monotone = false;
  }
  const double first = acc.mean_accuracy.front(), last = acc.mean_accuracy.back();
  const bool ok = pop.instances.size() >= 200 && pop.cfg.grid == 64 && acc.overall_accuracy > kOverallAccuracy &&
                  last - first >= kNearFarGap && monotone;
  return {ok, fmt("%zu instances, overall %.4f > %.2f, first bin %.4f, last bin %.4f, gap >= %.2f, monotone %s",
                  pop.instances.size(), acc.overall_accuracy, kOverallAccuracy, first, last, kNearFarGap,
                  monotone ? "yes" : "no")};
}

Outcome size_trend() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& pop = default_population();
  const auto curve = noiselab::iou_vs_size(pop.instances, {14, 28, 56}, pop.cfg.boundary_band);
  const double b14 = curve.boundary_iou[0], b28 = curve.boundary_iou[1], b56 = curve.boundary_iou[2];
  const double m14 = curve.mask_iou[0], m56 = curve.mask_iou[2];
  const double secs = elapsed(t0);
  const bool ok = b14 - b28 >= kBoundaryGap && b28 - b56 >= kBoundaryGap && m14 >= m56 - kMaskSlack && secs < kCurveBudget;
  return {ok, fmt("boundary IoU 14/28/56 = %.4f/%.4f/%.4f, mask IoU 14 %.4f vs 56 %.4f", b14, b28, b56, m14, m56)};
}

Outcome bpm_profile() {
  int fixtures = 0, failed = 0;
  for (int width : {16, 24, 28, 32}) {
    for (double tau : {1.0, 1.25, 1.5}) {
      for (int center = 7; center <= width - 8; center += 3) {
        RealGrid g(4, width);
        for (int r = 0; r < 4; ++r) {
          for (int c = 0; c < width; ++c) g(r, c) = sigmoid((c - center) / tau);
        }
        const BpmMap bpm = bpm_from_prob(ProbMask(g));
        ++fixtures;
        int argmin = center, argmax = 0;
        for (int c = 0; c < width; ++c) {
          if (std::abs(c - center) <= kDipWindow && bpm(0, c) < bpm(0, argmin)) argmin = c;
          if (bpm(0, c) > bpm(0, argmax)) argmax = c;
        }
        bool ok = argmin == center && std::abs(argmax - center) <= kDipWindow;
        for (int c = 0; c < width; ++c) {
          if (std::abs(c - center) > kFarDistance && bpm(0, c) >= kFarFraction * bpm(0, argmax)) ok = false;
        }
        failed += !ok;
      }
    }
  }
  return {failed == 0, fmt("%d sigmoid-edge fixtures, %d failed", fixtures, failed)};
}

Outcome codec_and_metrics() {
  std::mt19937_64 eng(7007);
  int rle_fail = 0, dt_fail = 0, iou_fail = 0;
  for (int t = 0; t < 1000; ++t) {
    const BitMask m = oracle::random_mask(eng, oracle::uniform_int(eng, 1, 40), oracle::uniform_int(eng, 1, 40),
                                          oracle::unit(eng));
    rle_fail += !(rle_decode(rle_encode(m)) == m);
  }
  double worst = 0;
  for (int t = 0; t < 100; ++t) {
    BitMask m = oracle::random_mask(eng, oracle::uniform_int(eng, 1, 32), oracle::uniform_int(eng, 1, 32),
                                    0.6 * oracle::unit(eng));
    if (m.empty()) m.set(0, 0);
    const auto got = distance_to_boundary(m);
    const auto want = oracle::distance(m);
    double err = 0;
    for (std::size_t i = 0; i < got.size(); ++i) err = std::max(err, std::abs(got.values()[i] - want.values()[i]));
    worst = std::max(worst, err);
    dt_fail += err > kDistanceTolerance;
  }
  for (int t = 0; t < 50; ++t) {
    const BitMask a = oracle::random_mask(eng, 8, 8, oracle::unit(eng));
    const BitMask b = oracle::random_mask(eng, 8, 8, oracle::unit(eng));
    iou_fail += boundary_iou(a, b, std::hypot(8.0, 8.0)) != mask_iou(a, b);
  }
  return {rle_fail + dt_fail + iou_fail == 0,
          fmt("rle %d/1000 failed, distance %d/100 failed (max err %.2g), band IoU %d/50 failed", rle_fail, dt_fail,
              worst, iou_fail)};
}

int run(const std::string& args) {
  const std::string cmd = std::string(PSEUDOFORGE_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path fixtures = PSEUDOFORGE_FIXTURES;
  const fs::path root = fs::temp_directory_path() / "pseudoforge_acceptance";
  fs::remove_all(root);
  const std::string cfg = " --config " + (fixtures / "pipeline.cfg").string();
  const std::string preds = " --predictions " + (fixtures / "predictions.json").string();
  if (run("stats " + (fixtures / "labeled.json").string() + " --out " + (root / "stats").string()) != 0) {
    return {false, "stats failed"};
  }
  const std::vector<std::string> runs{"j1a", "j1b", "j8a", "j8b"};
  for (const auto& name : runs) {
    const std::string jobs = name[1] == '1' ? " --jobs 1" : " --jobs 8";
    const std::string out = " --out " + (root / name).string();
    if (run("calibrate" + preds + " --stats " + (root / "stats" / "stats.json").string() + cfg + jobs + out) != 0 ||
        run("pseudolabel" + preds + " --thresholds " + (root / name / "thresholds.json").string() + " --images " +
            (fixtures / "images.json").string() + cfg + jobs + out) != 0 ||
        run("simulate" + cfg + jobs + out) != 0) {
      return {false, "a command failed in run " + name};
    }
  }
  // Run reports carry wall time, job count and their own directory; every
  // other artifact must match byte for byte.
  int compared = 0, differing = 0;
  for (const auto& entry : fs::directory_iterator(root / runs[0])) {
    const std::string file = entry.path().filename().string();
    if (file.ends_with("_report.json")) continue;
    const std::string ref = slurp(entry.path());
    for (std::size_t k = 1; k < runs.size(); ++k) {
      ++compared;
      if (!fs::exists(root / runs[k] / file) || slurp(root / runs[k] / file) != ref) ++differing;
    }
  }
  return {compared > 0 && differing == 0,
          fmt("calibrate+pseudolabel+simulate x2 at --jobs 1 and 8, %d comparisons, %d differ", compared, differing)};
}

}  // namespace

int main() {
  report(1, "threshold-solver oracle equivalence", solver_equivalence);
  report(2, "distribution matching", distribution_matching);
  report(3, "gradient correctness", gradient_correctness);
  report(4, "accuracy vs distance trend", accuracy_trend);
  report(5, "IoU vs size trend", size_trend);
  report(6, "BPM profile on sigmoid edges", bpm_profile);
  report(7, "codec and metric invariants", codec_and_metrics);
  report(8, "pipeline determinism", determinism);
  std::printf("%s: %d of 8 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
