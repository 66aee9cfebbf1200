#include "pseudoforge/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "pseudoforge/bpm.hpp"
#include "pseudoforge/calib.hpp"
#include "pseudoforge/gradcheck.hpp"
#include "pseudoforge/io.hpp"
#include "pseudoforge/metrics.hpp"
#include "pseudoforge/noiselab.hpp"
#include "pseudoforge/parallel.hpp"

namespace pseudoforge::pipeline {

namespace {

using io::format9;
using io::Json;
using io::round9;
using Clock = std::chrono::steady_clock;

class CommandScope {
 public:
  CommandScope(const CommandOptions& opts, const std::string& name)
      : opts_(opts), report_(name), name_(name), start_(Clock::now()) {
    set_num_threads(opts.jobs);
    cfg_ = effective_config(opts);
    report_.set_config(cfg_.snapshot());
    if (opts.config_path) report_.add_input(*opts.config_path);
  }

  const PipelineConfig& config() const { return cfg_; }
  RunReport& report() { return report_; }
  fs::path out(const std::string& file) const { return opts_.out_dir / file; }

  void emit_json(const fs::path& path, const Json& doc, int indent = 2) {
    io::write_json(path, doc, indent);
    report_.add_output(path);
  }
  void emit_text(const fs::path& path, const std::string& text) {
    io::write_text(path, text);
    report_.add_output(path);
  }

  void finish() {
    const double secs = std::chrono::duration<double>(Clock::now() - start_).count();
    io::write_json(out(name_ + "_report.json"), report_.to_json(secs, opts_.jobs));
  }

 private:
  const CommandOptions& opts_;
  RunReport report_;
  std::string name_;
  Clock::time_point start_;
  PipelineConfig cfg_;
};

void require_mask_side(const std::vector<Detection>& dets, int side) {
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (dets[i].mask.height() != side || dets[i].mask.width() != side) {
      throw Error(ErrorCode::DimensionMismatch,
                  "detections[" + std::to_string(i) + "].mask is " + std::to_string(dets[i].mask.height()) +
                      "x" + std::to_string(dets[i].mask.width()) + ", configured mask_side is " +
                      std::to_string(side));
    }
  }
}

std::string category_label(CategoryId id, const std::vector<io::Category>& cats) {
  for (const auto& c : cats) {
    if (c.id == id && !c.name.empty()) return c.name + " (" + std::to_string(id) + ")";
  }
  return std::to_string(id);
}

ProbMask sigmoid_edge(int height, int width, double center, double tau) {
  RealGrid g(height, width);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) g(r, c) = sigmoid((c - center) / tau);
  }
  return ProbMask(std::move(g));
}

}  // namespace

Json RunReport::to_json(double wall_time_seconds, int jobs) const {
  Json inputs = Json::object(), outputs = Json::object();
  for (const auto& p : inputs_) inputs[p.string()] = io::sha256_file(p);
  for (const auto& p : outputs_) outputs[p.string()] = io::sha256_file(p);
  return {{"command", command_},
          {"config", config_},
          {"inputs", std::move(inputs)},
          {"outputs", std::move(outputs)},
          {"counts", counts_},
          {"jobs", jobs},
          {"wall_time_seconds", round9(wall_time_seconds)}};
}

PipelineConfig effective_config(const CommandOptions& opts) {
  PipelineConfig cfg = opts.config_path ? load_config(*opts.config_path) : PipelineConfig{};
  if (opts.seed) cfg.rng_seed = *opts.seed;
  return cfg;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::CountMismatch:
    case ErrorCode::InvalidThreshold:
    case ErrorCode::InvalidArgument:
    case ErrorCode::NoBoundary:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::EmptyDataset:
    case ErrorCode::NoRetainedDetections:
    case ErrorCode::UnknownImage:
    case ErrorCode::EmptyBox:
    case ErrorCode::NonFinite:
    case ErrorCode::SchemaError:
    case ErrorCode::ConfigError:
    case ErrorCode::ImageSetMismatch:
    case ErrorCode::IoError:
      return kInputError;
  }
  return kInternalError;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const Error& e) {
    spdlog::debug("exit on {}", to_string(e.code()));
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    spdlog::debug("unhandled exception");
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternalError;
  }
}

int cmd_stats(const CommandOptions& opts, const fs::path& annotations) {
  CommandScope scope(opts, "stats");
  scope.report().add_input(annotations);
  const auto doc = io::parse_annotations(io::read_json(annotations));
  const LabeledStats stats = compute_labeled_stats({doc.images, doc.annotations});
  scope.emit_json(scope.out("stats.json"), io::to_json(stats));

  std::cout << "images: " << stats.num_images << "\n";
  std::cout << "fg_pixel_fraction: " << format9(stats.fg_pixel_fraction) << "\n";
  for (const auto& [c, n] : stats.instances_per_category) {
    std::cout << "category " << category_label(c, doc.categories) << ": " << n
              << " instances, rate " << format9(stats.rate(c)) << " per image\n";
  }
  scope.report().counts() = {{"images", stats.num_images}, {"annotations", doc.annotations.size()}};
  scope.finish();
  return kSuccess;
}

int cmd_calibrate(const CommandOptions& opts, const fs::path& predictions, const fs::path& stats_path,
                  std::int64_t num_unlabeled) {
  CommandScope scope(opts, "calibrate");
  scope.report().add_input(predictions);
  scope.report().add_input(stats_path);
  const auto& cfg = scope.config();
  io::TransformFilter filter{cfg.tta};
  const auto preds = io::parse_predictions(io::read_json(predictions), filter);
  require_mask_side(preds.detections, cfg.mask_side);
  const LabeledStats stats = io::parse_stats(io::read_json(stats_path));
  if (num_unlabeled <= 0) num_unlabeled = static_cast<std::int64_t>(preds.images.size());

  const ThresholdSet set = calibrate(preds.detections, stats, num_unlabeled, cfg.test_pixel_threshold);
  scope.emit_json(scope.out("thresholds.json"), io::to_json(set));

  std::cout << "category        target  available  kept  threshold\n";
  Json per_category = Json::object();
  for (const auto& [c, t] : set.box) {
    std::cout << category_label(c, preds.categories) << "  " << t.target << "  " << t.available << "  "
              << t.kept << "  " << (t.degenerate ? std::string("keep-nothing") : format9(t.threshold))
              << "\n";
    per_category[std::to_string(c)] = {{"kept", t.kept}, {"available", t.available}};
  }
  std::cout << "pixel threshold: " << format9(set.pixel.threshold) << " (target fg "
            << format9(set.pixel.target_fraction) << ", achieved " << format9(set.pixel.achieved_fraction)
            << ")\n";
  scope.report().counts() = {{"detections", preds.detections.size()}, {"per_category", per_category}};
  scope.finish();
  if (set.pixel_degenerate) {
    spdlog::warn("no detections retained; pixel threshold fell back to {}", set.pixel.threshold);
    return kDegenerate;
  }
  return kSuccess;
}

int cmd_pseudolabel(const CommandOptions& opts, const fs::path& predictions, const fs::path& thresholds,
                    const fs::path& images_meta, const fs::path& out_path) {
  CommandScope scope(opts, "pseudolabel");
  scope.report().add_input(predictions);
  scope.report().add_input(thresholds);
  scope.report().add_input(images_meta);
  const auto& cfg = scope.config();
  const auto preds = io::parse_predictions(io::read_json(predictions), io::TransformFilter{cfg.tta});
  require_mask_side(preds.detections, cfg.mask_side);
  const ThresholdSet set = io::parse_thresholds(io::read_json(thresholds));
  const auto images = io::parse_images(io::read_json(images_meta));

  const PseudoLabelSet labels = generate_pseudo_labels(preds.detections, set, images);
  scope.emit_json(out_path, io::to_json(io::to_annotations(labels, preds.categories)), -1);

  Json per_category = Json::object();
  for (const auto& [c, n] : labels.report.per_category) {
    per_category[std::to_string(c)] = {
        {"kept", n.kept}, {"below_threshold", n.below_threshold}, {"empty_mask", n.empty_mask}};
    std::cout << "category " << category_label(c, preds.categories) << ": kept " << n.kept
              << ", below threshold " << n.below_threshold << ", empty after binarization "
              << n.empty_mask << "\n";
  }
  scope.report().counts() = {{"images", images.size()},
                             {"detections", preds.detections.size()},
                             {"kept", labels.report.kept()},
                             {"dropped_empty", labels.report.dropped_empty()},
                             {"per_category", per_category}};
  scope.finish();
  std::cout << "pseudo instances: " << labels.report.kept() << "\n";
  return labels.report.kept() == 0 ? kDegenerate : kSuccess;
}

int cmd_bpm(const CommandOptions& opts, const std::optional<fs::path>& input,
            const std::optional<std::string>& fixture, const std::optional<fs::path>& target_path) {
  CommandScope scope(opts, "bpm");
  const auto& cfg = scope.config();
  if (input.has_value() == fixture.has_value()) {
    throw Error(ErrorCode::InvalidArgument, "pass exactly one of --input and --fixture");
  }

  ProbMask p;
  if (input) {
    scope.report().add_input(*input);
    p = ProbMask(io::grid_from_json(io::read_json(*input), input->string()));
  } else if (*fixture == "constant") {
    p = ProbMask(cfg.mask_side, cfg.mask_side, 0.5);
  } else if (*fixture == "sigmoid") {
    p = sigmoid_edge(cfg.mask_side, cfg.mask_side, cfg.mask_side / 2, 1.5);
  } else if (*fixture == "random") {
    std::mt19937_64 eng(cfg.rng_seed);
    std::vector<double> v(64);
    for (auto& x : v) x = double(eng() >> 11) * 0x1.0p-53;
    p = ProbMask(8, 8, std::move(v));
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown fixture '" + *fixture + "'");
  }

  BitMask target = binarize(p, cfg.test_pixel_threshold);
  if (target_path) {
    scope.report().add_input(*target_path);
    const RealGrid t = io::grid_from_json(io::read_json(*target_path), target_path->string());
    if (!t.same_shape(p.grid())) throw Error(ErrorCode::DimensionMismatch, "target does not match the map");
    for (int r = 0; r < t.height(); ++r) {
      for (int c = 0; c < t.width(); ++c) target.set(r, c, t(r, c) >= 0.5);
    }
  }

  const RealGrid lap = laplacian(p);
  const BpmMap bpm = bpm_from_prob(p, cfg.bpm_floor);
  RealGrid logits(p.height(), p.width());
  for (std::size_t i = 0; i < logits.size(); ++i) logits.values()[i] = logit(p.values()[i]);
  const BceResult bce = weighted_bce(logits, target, bpm);

  Json loss = {{"weighted_bce", round9(bce.loss)},
               {"size", {p.height(), p.width()}},
               {"bpm_floor", round9(cfg.bpm_floor)}};
  if (p.height() == p.width() && cfg.low_side <= p.height()) {
    NtmTargets targets{target, downsample_mask(target, cfg.low_side)};
    const ProbMask low_p = downsample_prob(p, cfg.low_side);
    RealGrid low_logits(cfg.low_side, cfg.low_side);
    for (std::size_t i = 0; i < low_logits.size(); ++i) low_logits.values()[i] = logit(low_p.values()[i]);
    const MaskLossReport ntm = ntm_loss(logits, low_logits, targets, bpm, cfg.low_branch_weight);
    loss["ntm"] = {{"total", round9(ntm.total)},
                   {"high_res_term", round9(ntm.high_res_term)},
                   {"low_res_term", round9(ntm.low_res_term)},
                   {"alpha", round9(ntm.alpha)},
                   {"low_side", cfg.low_side},
                   {"grad_low", io::grid_to_json(ntm.grad_low)}};
  }
  loss["grad"] = io::grid_to_json(bce.grad);

  std::ostringstream grid_csv;
  grid_csv << "row,col,prob,laplacian,weight,target,grad\n";
  for (int r = 0; r < p.height(); ++r) {
    for (int c = 0; c < p.width(); ++c) {
      grid_csv << r << ',' << c << ',' << format9(p(r, c)) << ',' << format9(lap(r, c)) << ','
               << format9(bpm(r, c)) << ',' << (target(r, c) ? 1 : 0) << ',' << format9(bce.grad(r, c))
               << '\n';
    }
  }
  // Column means: the profile across a vertical edge.
  std::ostringstream col_csv;
  col_csv << "col,prob,laplacian,weight\n";
  for (int c = 0; c < p.width(); ++c) {
    double sp = 0, sl = 0, sw = 0;
    for (int r = 0; r < p.height(); ++r) {
      sp += p(r, c);
      sl += lap(r, c);
      sw += bpm(r, c);
    }
    const double n = p.height();
    col_csv << c << ',' << format9(sp / n) << ',' << format9(sl / n) << ',' << format9(sw / n) << '\n';
  }

  scope.emit_json(scope.out("bpm_weights.json"), io::grid_to_json(bpm.weights()));
  scope.emit_text(scope.out("bpm_grid.csv"), grid_csv.str());
  scope.emit_text(scope.out("bpm_columns.csv"), col_csv.str());
  scope.emit_json(scope.out("loss_report.json"), loss);
  std::cout << "weighted BCE: " << format9(bce.loss) << "\n";

  int code = kSuccess;
  if (opts.gradcheck) {
    std::mt19937_64 eng(cfg.rng_seed + 1);
    auto unit = [&] { return double(eng() >> 11) * 0x1.0p-53; };
    RealGrid z(8, 8), zl(4, 4);
    BitMask y(8, 8);
    std::vector<double> probs(64);
    for (auto& v : z.values()) v = 8 * unit() - 4;
    for (auto& v : zl.values()) v = 8 * unit() - 4;
    for (int i = 0; i < 64; ++i) y.set(i / 8, i % 8, unit() < 0.5);
    for (auto& v : probs) v = unit();
    const BpmMap w = bpm_from_prob(ProbMask(8, 8, probs), cfg.bpm_floor);
    const double bce_err = check_bce_gradient(z, y, w.weights());
    const double ntm_err = check_ntm_gradient(z, zl, NtmTargets{y, downsample_mask(y, 4)}, w, cfg.low_branch_weight);
    const bool ok = bce_err <= kGradCheckTolerance && ntm_err <= kGradCheckTolerance;
    scope.emit_json(scope.out("gradcheck.json"), {{"step", kGradCheckStep},
                                                  {"tolerance", kGradCheckTolerance},
                                                  {"max_rel_error_bce", round9(bce_err)},
                                                  {"max_rel_error_ntm", round9(ntm_err)},
                                                  {"passed", ok}});
    std::cout << "gradcheck: max rel. error bce " << format9(bce_err) << ", ntm " << format9(ntm_err)
              << (ok ? " (ok)" : " (FAILED)") << "\n";
    if (!ok) code = kInternalError;
  }
  scope.report().counts() = {{"pixels", p.size()}};
  scope.finish();
  return code;
}

int cmd_simulate(const CommandOptions& opts) {
  CommandScope scope(opts, "simulate");
  const auto& cfg = scope.config();
  auto instances = noiselab::gen_instances(cfg.num_instances, cfg.grid, cfg.rng_seed,
                                           noiselab::parse_shape_family(cfg.shape_family));
  noiselab::apply_noise(instances, {cfg.noise_q0, cfg.noise_d0}, cfg.rng_seed + noiselab::kNoiseSeedOffset);

  const auto acc = noiselab::accuracy_vs_distance(instances, cfg.distance_bins);
  const auto sizes = noiselab::iou_vs_size(instances, cfg.sizes, cfg.boundary_band);
  const auto profile = noiselab::bpm_profile(instances, cfg.smoothing_radius, cfg.bpm_floor,
                                             cfg.profile_max_distance, cfg.weight_quantiles);

  std::ostringstream acc_csv;
  acc_csv << "bin,lower,upper,mean_accuracy,count\n";
  for (std::size_t b = 0; b < acc.counts.size(); ++b) {
    acc_csv << b << ',' << format9(acc.bin_edges[b]) << ',' << format9(acc.bin_edges[b + 1]) << ','
            << format9(acc.mean_accuracy[b]) << ',' << acc.counts[b] << '\n';
  }
  std::ostringstream size_csv;
  size_csv << "size,band,mask_iou,boundary_iou\n";
  for (std::size_t k = 0; k < sizes.sizes.size(); ++k) {
    size_csv << sizes.sizes[k] << ',' << sizes.band[k] << ',' << format9(sizes.mask_iou[k]) << ','
             << format9(sizes.boundary_iou[k]) << '\n';
  }
  std::ostringstream prof_csv;
  prof_csv << "distance,mean_weight,count\n";
  for (std::size_t b = 0; b < profile.distance.size(); ++b) {
    prof_csv << format9(profile.distance[b]) << ',' << format9(profile.mean_weight[b]) << ','
             << profile.distance_counts[b] << '\n';
  }
  std::ostringstream qacc_csv;
  qacc_csv << "quantile,mean_weight,accuracy,count\n";
  for (std::size_t q = 0; q < profile.quantile_counts.size(); ++q) {
    qacc_csv << q << ',' << format9(profile.quantile_mean_weight[q]) << ','
             << format9(profile.quantile_accuracy[q]) << ',' << profile.quantile_counts[q] << '\n';
  }

  Json size_rows = Json::array();
  for (std::size_t k = 0; k < sizes.sizes.size(); ++k) {
    size_rows.push_back({{"size", sizes.sizes[k]},
                         {"mask_iou", round9(sizes.mask_iou[k])},
                         {"boundary_iou", round9(sizes.boundary_iou[k])}});
  }
  Json summary = {{"instances", instances.size()},
                  {"overall_accuracy", round9(acc.overall_accuracy)},
                  {"first_bin_accuracy", round9(acc.mean_accuracy.front())},
                  {"last_bin_accuracy", round9(acc.mean_accuracy.back())},
                  {"analyzed_pixels", acc.total_pixels},
                  {"sizes", std::move(size_rows)},
                  {"config", cfg.snapshot()}};

  scope.emit_text(scope.out("accuracy_vs_distance.csv"), acc_csv.str());
  scope.emit_text(scope.out("iou_vs_size.csv"), size_csv.str());
  scope.emit_text(scope.out("bpm_profile.csv"), prof_csv.str());
  scope.emit_text(scope.out("bpm_accuracy.csv"), qacc_csv.str());
  scope.emit_json(scope.out("simulate_summary.json"), summary);
  std::cout << "overall pixel accuracy: " << format9(acc.overall_accuracy) << "\n";
  for (std::size_t k = 0; k < sizes.sizes.size(); ++k) {
    std::cout << "size " << sizes.sizes[k] << ": mask IoU " << format9(sizes.mask_iou[k])
              << ", boundary IoU " << format9(sizes.boundary_iou[k]) << "\n";
  }
  scope.report().counts() = {{"instances", instances.size()}, {"pixels", acc.total_pixels}};
  scope.finish();
  return kSuccess;
}

int cmd_eval(const CommandOptions& opts, const fs::path& predictions, const fs::path& ground_truth) {
  CommandScope scope(opts, "eval");
  scope.report().add_input(predictions);
  scope.report().add_input(ground_truth);
  const auto& cfg = scope.config();
  const auto pred = io::parse_annotations(io::read_json(predictions));
  const auto gt = io::parse_annotations(io::read_json(ground_truth));

  std::set<ImageId> pred_ids, gt_ids;
  for (const auto& i : pred.images) pred_ids.insert(i.id);
  for (const auto& i : gt.images) gt_ids.insert(i.id);
  if (pred_ids != gt_ids) throw Error(ErrorCode::ImageSetMismatch, "prediction and ground-truth image sets differ");

  double sum_mask = 0, sum_boundary = 0;
  std::int64_t entries = 0, matched = 0;
  Json per_image = Json::array();
  for (const auto& img : gt.images) {
    std::vector<std::size_t> ps, gs;
    for (std::size_t i = 0; i < pred.annotations.size(); ++i) {
      if (pred.annotations[i].image_id == img.id) ps.push_back(i);
    }
    for (std::size_t i = 0; i < gt.annotations.size(); ++i) {
      if (gt.annotations[i].image_id == img.id) gs.push_back(i);
    }
    const double band = cfg.boundary_band > 0 ? cfg.boundary_band : default_boundary_band(img.height, img.width);

    Json matrix = Json::array();
    struct Candidate {
      double iou;
      std::size_t p, g;
    };
    std::vector<Candidate> candidates;
    for (std::size_t a = 0; a < ps.size(); ++a) {
      Json row = Json::array();
      for (std::size_t b = 0; b < gs.size(); ++b) {
        const auto& pa = pred.annotations[ps[a]];
        const auto& gb = gt.annotations[gs[b]];
        const double iou = mask_iou(pa.mask, gb.mask);
        row.push_back(round9(iou));
        if (pa.category_id == gb.category_id && iou > 0) candidates.push_back({iou, a, b});
      }
      matrix.push_back(std::move(row));
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& x, const Candidate& y) {
      if (x.iou != y.iou) return x.iou > y.iou;
      if (x.p != y.p) return x.p < y.p;
      return x.g < y.g;
    });
    std::vector<bool> p_used(ps.size(), false), g_used(gs.size(), false);
    Json matches = Json::array();
    for (const auto& c : candidates) {
      if (p_used[c.p] || g_used[c.g]) continue;
      p_used[c.p] = g_used[c.g] = true;
      const double biou = boundary_iou(pred.annotations[ps[c.p]].mask, gt.annotations[gs[c.g]].mask, band);
      sum_mask += c.iou;
      sum_boundary += biou;
      ++matched;
      matches.push_back({{"prediction", ps[c.p] + 1},
                         {"ground_truth", gs[c.g] + 1},
                         {"mask_iou", round9(c.iou)},
                         {"boundary_iou", round9(biou)}});
    }
    const auto unmatched = std::count(p_used.begin(), p_used.end(), false) +
                           std::count(g_used.begin(), g_used.end(), false);
    entries += static_cast<std::int64_t>(matches.size()) + unmatched;
    per_image.push_back({{"image_id", img.id},
                         {"band", band},
                         {"mask_iou_matrix", std::move(matrix)},
                         {"matches", std::move(matches)},
                         {"unmatched", unmatched}});
  }
  const double mean_mask = entries ? sum_mask / double(entries) : 1.0;
  const double mean_boundary = entries ? sum_boundary / double(entries) : 1.0;
  scope.emit_json(scope.out("eval.json"), {{"mean_mask_iou", round9(mean_mask)},
                                           {"mean_boundary_iou", round9(mean_boundary)},
                                           {"matched", matched},
                                           {"entries", entries},
                                           {"images", std::move(per_image)}});
  std::cout << "mean mask IoU: " << format9(mean_mask) << "\n"
            << "mean boundary IoU: " << format9(mean_boundary) << "\n";
  scope.report().counts() = {{"predictions", pred.annotations.size()},
                             {"ground_truth", gt.annotations.size()},
                             {"matched", matched}};
  scope.finish();
  return kSuccess;
}

}  // namespace pseudoforge::pipeline
