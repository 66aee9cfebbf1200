#include "pseudoforge/config.hpp"

#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>

#include "pseudoforge/io.hpp"
#include "pseudoforge/metrics.hpp"
#include "pseudoforge/noiselab.hpp"

namespace pseudoforge {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& v, const std::string& where) {
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(d)) {
    throw Error(ErrorCode::ConfigError, where + ": expected a number, got '" + v + "'");
  }
  return d;
}

long long to_int(const std::string& v, const std::string& where) {
  char* end = nullptr;
  const long long i = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || end != v.c_str() + v.size()) {
    throw Error(ErrorCode::ConfigError, where + ": expected an integer, got '" + v + "'");
  }
  return i;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::ConfigError, what);
}

}  // namespace

void PipelineConfig::validate() const {
  require(mask_side >= 1, "mask_side must be >= 1");
  require(low_side >= 1 && low_side <= mask_side, "low_side must lie in [1, mask_side]");
  require(bpm_floor > 0 && bpm_floor <= 1, "bpm_floor must lie in (0, 1]");
  require(low_branch_weight >= 0, "low_branch_weight must be >= 0");
  require(boundary_band >= 0, "boundary_band must be >= 0 or 2%-diagonal");
  require(test_pixel_threshold > 0 && test_pixel_threshold < 1, "test_pixel_threshold must lie in (0, 1)");
  require(noise_q0 >= 0 && noise_q0 <= 1, "noise_q0 must lie in [0, 1]");
  require(noise_d0 > 0, "noise_d0 must be > 0");
  for (const auto& t : tta) {
    if (t == "scale") continue;
    try {
      parse_transform(t);
    } catch (const Error&) {
      require(false, "unknown tta transform '" + t + "'");
    }
  }
  require(num_instances >= 1, "num_instances must be >= 1");
  require(grid >= 16, "grid must be >= 16");
  require(shape_family == "ellipse" || shape_family == "polygon", "shape_family must be ellipse or polygon");
  require(distance_bins >= 1, "distance_bins must be >= 1");
  require(!sizes.empty(), "sizes must not be empty");
  for (int s : sizes) require(s >= 4, "every size must be >= 4");
  require(smoothing_radius >= 0, "smoothing_radius must be >= 0");
  require(profile_max_distance >= 1, "profile_max_distance must be >= 1");
  require(weight_quantiles >= 1, "weight_quantiles must be >= 1");
}

nlohmann::json PipelineConfig::snapshot() const {
  using io::round9;
  return {{"mask_side", mask_side},
          {"low_side", low_side},
          {"bpm_floor", round9(bpm_floor)},
          {"low_branch_weight", round9(low_branch_weight)},
          {"boundary_band", boundary_band == 0 ? nlohmann::json("2%-diagonal") : nlohmann::json(boundary_band)},
          {"test_pixel_threshold", round9(test_pixel_threshold)},
          {"rng_seed", rng_seed},
          {"noise_q0", round9(noise_q0)},
          {"noise_d0", round9(noise_d0)},
          {"tta", tta},
          {"num_instances", num_instances},
          {"grid", grid},
          {"shape_family", shape_family},
          {"distance_bins", distance_bins},
          {"sizes", sizes},
          {"smoothing_radius", smoothing_radius},
          {"profile_max_distance", profile_max_distance},
          {"weight_quantiles", weight_quantiles}};
}

PipelineConfig parse_config(const std::string& text, const std::string& origin) {
  PipelineConfig cfg;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  auto as_int = [](int& dst) {
    return [&dst](const std::string& v, const std::string& w) { dst = static_cast<int>(to_int(v, w)); };
  };
  auto as_double = [](double& dst) {
    return [&dst](const std::string& v, const std::string& w) { dst = to_double(v, w); };
  };
  const std::map<std::string, Setter> setters{
      {"mask_side", as_int(cfg.mask_side)},
      {"low_side", as_int(cfg.low_side)},
      {"bpm_floor", as_double(cfg.bpm_floor)},
      {"low_branch_weight", as_double(cfg.low_branch_weight)},
      {"boundary_band",
       [&](const std::string& v, const std::string& w) {
         cfg.boundary_band = v == "2%-diagonal" ? 0 : static_cast<int>(to_int(v, w));
         require(v == "2%-diagonal" || cfg.boundary_band >= 1, w + ": band must be >= 1 or 2%-diagonal");
       }},
      {"test_pixel_threshold", as_double(cfg.test_pixel_threshold)},
      {"rng_seed",
       [&](const std::string& v, const std::string& w) {
         const long long s = to_int(v, w);
         require(s >= 0, w + ": rng_seed must be non-negative");
         cfg.rng_seed = static_cast<std::uint64_t>(s);
       }},
      {"noise_q0", as_double(cfg.noise_q0)},
      {"noise_d0", as_double(cfg.noise_d0)},
      {"tta", [&](const std::string& v, const std::string&) { cfg.tta = split_list(v); }},
      {"num_instances", as_int(cfg.num_instances)},
      {"grid", as_int(cfg.grid)},
      {"shape_family", [&](const std::string& v, const std::string&) { cfg.shape_family = v; }},
      {"distance_bins", as_int(cfg.distance_bins)},
      {"sizes",
       [&](const std::string& v, const std::string& w) {
         cfg.sizes.clear();
         for (const auto& s : split_list(v)) cfg.sizes.push_back(static_cast<int>(to_int(s, w)));
       }},
      {"smoothing_radius", as_int(cfg.smoothing_radius)},
      {"profile_max_distance", as_int(cfg.profile_max_distance)},
      {"weight_quantiles", as_int(cfg.weight_quantiles)},
  };

  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::map<std::string, int> seen;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = origin + ":" + std::to_string(lineno);
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::ConfigError, where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto it = setters.find(key);
    if (it == setters.end()) throw Error(ErrorCode::ConfigError, where + ": unknown key '" + key + "'");
    if (auto [prev, fresh] = seen.emplace(key, lineno); !fresh) {
      throw Error(ErrorCode::ConfigError,
                  where + ": duplicate key '" + key + "' (first set on line " + std::to_string(prev->second) + ")");
    }
    it->second(value, where + " (" + key + ")");
  }
  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  return parse_config(io::read_text(path), path.string());
}

}  // namespace pseudoforge
