#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>

#include "pseudoforge/pipeline.hpp"

namespace pp = pseudoforge::pipeline;

namespace {

// PSEUDOFORGE_LOG only sets verbosity: trace, debug, info, warn, error, off.
void init_logging() {
  auto logger = spdlog::stderr_color_mt("pseudoforge");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("PSEUDOFORGE_LOG")) {
    const auto level = spdlog::level::from_str(env);
    if (level != spdlog::level::off || std::string(env) == "off") spdlog::set_level(level);
  }
}

void add_common(CLI::App* cmd, pp::CommandOptions& opts, std::string& config, std::string& out) {
  cmd->add_option("--config", config, "key = value configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", opts.seed, "override rng_seed");
  cmd->add_option("--out", out, "output directory")->capture_default_str();
  cmd->add_option("--jobs", opts.jobs, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  init_logging();
  CLI::App app{"pseudoforge: pseudo-label calibration, boundary-preserving loss and noise analysis"};
  app.require_subcommand(1);

  pp::CommandOptions opts;
  std::string config, out = ".";
  std::string annotations, predictions, stats, thresholds, images, out_path, input, fixture, target, gt;
  std::int64_t num_unlabeled = 0;

  auto* stats_cmd = app.add_subcommand("stats", "labeled-set statistics");
  stats_cmd->add_option("annotations", annotations, "labeled annotation document")->required();

  auto* cal = app.add_subcommand("calibrate", "solve box and pixel thresholds");
  cal->add_option("--predictions", predictions, "prediction document")->required();
  cal->add_option("--stats", stats, "output of `stats`")->required();
  cal->add_option("--num-unlabeled", num_unlabeled,
                  "number of unlabeled images (default: images listed in the prediction document)");

  auto* pl = app.add_subcommand("pseudolabel", "apply thresholds and write pseudo annotations");
  pl->add_option("--predictions", predictions, "prediction document")->required();
  pl->add_option("--thresholds", thresholds, "output of `calibrate`")->required();
  pl->add_option("--images", images, "image metadata document")->required();
  pl->add_option("--output", out_path, "pseudo annotation path (default: <out>/pseudo_labels.json)");

  auto* bpm = app.add_subcommand("bpm", "boundary-preserving weights and loss report");
  auto* in_opt = bpm->add_option("--input", input, "probability grid JSON");
  auto* fx_opt = bpm->add_option("--fixture", fixture, "constant | sigmoid | random")
                     ->check(CLI::IsMember({"constant", "sigmoid", "random"}));
  in_opt->excludes(fx_opt);
  bpm->add_option("--target", target, "binary target grid JSON (default: p >= 0.5)");
  bpm->add_flag("--gradcheck", opts.gradcheck, "check analytic gradients by finite differences");

  auto* sim = app.add_subcommand("simulate", "synthetic boundary-noise analyses");

  auto* ev = app.add_subcommand("eval", "mask and boundary IoU of predictions against ground truth");
  ev->add_option("predictions", predictions, "predicted annotation document")->required();
  ev->add_option("ground_truth", gt, "ground-truth annotation document")->required();

  for (auto* cmd : {stats_cmd, cal, pl, bpm, sim, ev}) add_common(cmd, opts, config, out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : pp::kInputError;
  }

  return pp::guarded([&] {
    if (!config.empty()) opts.config_path = config;
    opts.out_dir = out;
    if (*stats_cmd) return pp::cmd_stats(opts, annotations);
    if (*cal) return pp::cmd_calibrate(opts, predictions, stats, num_unlabeled);
    if (*pl) {
      const auto dest = out_path.empty() ? opts.out_dir / "pseudo_labels.json" : pp::fs::path(out_path);
      return pp::cmd_pseudolabel(opts, predictions, thresholds, images, dest);
    }
    if (*bpm) {
      std::optional<pp::fs::path> in;
      std::optional<std::string> fx;
      std::optional<pp::fs::path> tg;
      if (!input.empty()) in = input;
      if (!fixture.empty()) fx = fixture;
      if (!target.empty()) tg = target;
      return pp::cmd_bpm(opts, in, fx, tg);
    }
    if (*sim) return pp::cmd_simulate(opts);
    return pp::cmd_eval(opts, predictions, gt);
  });
}
