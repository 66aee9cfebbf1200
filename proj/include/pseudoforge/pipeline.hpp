#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pseudoforge/config.hpp"

namespace pseudoforge::pipeline {

namespace fs = std::filesystem;

/// Process exit codes.
enum ExitCode : int {
  kSuccess = 0,
  kInternalError = 1,
  kInputError = 2,
  kDegenerate = 3,
};

struct CommandOptions {
  std::optional<fs::path> config_path;
  std::optional<std::uint64_t> seed;  // overrides rng_seed from the config
  fs::path out_dir = ".";
  int jobs = 1;
  bool gradcheck = false;
};

/// Provenance record written next to every command's outputs.
class RunReport {
 public:
  explicit RunReport(std::string command) : command_(std::move(command)) {}

  void set_config(nlohmann::json snapshot) { config_ = std::move(snapshot); }
  void add_input(const fs::path& p) { inputs_.push_back(p); }
  void add_output(const fs::path& p) { outputs_.push_back(p); }
  nlohmann::json& counts() { return counts_; }

  /// Digests are taken at call time; `wall_time_seconds` is the only field
  /// that varies between identical runs.
  nlohmann::json to_json(double wall_time_seconds, int jobs) const;

 private:
  std::string command_;
  nlohmann::json config_ = nlohmann::json::object();
  std::vector<fs::path> inputs_;
  std::vector<fs::path> outputs_;
  nlohmann::json counts_ = nlohmann::json::object();
};

/// Resolves the effective configuration (file, then --seed override).
PipelineConfig effective_config(const CommandOptions& opts);

int cmd_stats(const CommandOptions& opts, const fs::path& annotations);
/// num_unlabeled <= 0 means the images listed in the prediction document.
int cmd_calibrate(const CommandOptions& opts, const fs::path& predictions, const fs::path& stats,
                  std::int64_t num_unlabeled);
int cmd_pseudolabel(const CommandOptions& opts, const fs::path& predictions,
                    const fs::path& thresholds, const fs::path& images_meta, const fs::path& out_path);
/// Exactly one of `input` and `fixture` ("constant", "sigmoid", "random").
int cmd_bpm(const CommandOptions& opts, const std::optional<fs::path>& input,
            const std::optional<std::string>& fixture, const std::optional<fs::path>& target);
int cmd_simulate(const CommandOptions& opts);
int cmd_eval(const CommandOptions& opts, const fs::path& predictions, const fs::path& ground_truth);

/// Runs `body`, mapping library errors onto the exit-code contract and
/// logging the failure.
int guarded(const std::function<int()>& body);

/// Maps an error code onto the exit-code contract.
int exit_code_for(ErrorCode code);

}  // namespace pseudoforge::pipeline
