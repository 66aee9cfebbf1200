#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "pseudoforge/calib.hpp"
#include "pseudoforge/metrics.hpp"

namespace pseudoforge::io {

using Json = nlohmann::json;

/// Round to 9 significant digits; every float written by the pipeline goes
/// through this so documents stay byte-stable.
double round9(double v);
/// Largest 9-significant-digit value <= v (for positive v); thresholds are
/// written this way so that every score they admitted still passes.
double round9_down(double v);
/// "%.9g" formatting for CSV cells.
std::string format9(double v);

std::string read_text(const std::filesystem::path& path);
/// Parses JSON; syntax errors become SchemaError with the line number.
Json read_json(const std::filesystem::path& path);
/// Writes `doc` followed by a newline. indent < 0 writes compact JSON.
void write_json(const std::filesystem::path& path, const Json& doc, int indent = 2);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Lower-case hex SHA-256 of the file contents.
std::string sha256_file(const std::filesystem::path& path);

struct Category {
  CategoryId id = 0;
  std::string name;
};

/// Ground truth or pseudo labels: images, categories, annotations with
/// uncompressed RLE segmentations.
struct AnnotationDocument {
  std::vector<ImageInfo> images;
  std::vector<Category> categories;
  std::vector<GtInstance> annotations;
  /// Confidence per annotation; present for pseudo labels only.
  std::vector<double> scores;
};

struct PredictionDocument {
  std::vector<ImageInfo> images;
  std::vector<Category> categories;
  std::vector<Detection> detections;
};

/// Which TTA transforms a prediction document may carry. An entry "scale"
/// accepts every scale factor.
struct TransformFilter {
  std::vector<std::string> accepted{"identity", "hflip", "scale"};
  bool accepts(const Transform& t) const;
};

AnnotationDocument parse_annotations(const Json& doc);
Json to_json(const AnnotationDocument& doc);

/// Detections whose "tta_masks" list is present are fused with tta_fuse at
/// ingestion; the fused map replaces "mask".
PredictionDocument parse_predictions(const Json& doc, const TransformFilter& filter = {});
Json to_json(const PredictionDocument& doc);

/// Any document with an "images" array.
std::vector<ImageInfo> parse_images(const Json& doc);

Json to_json(const LabeledStats& stats);
LabeledStats parse_stats(const Json& doc);

Json to_json(const ThresholdSet& set);
ThresholdSet parse_thresholds(const Json& doc);

/// Pseudo labels in the annotation schema; annotation ids are 1-based in
/// image order.
AnnotationDocument to_annotations(const PseudoLabelSet& set, const std::vector<Category>& categories);

Json grid_to_json(const RealGrid& g);
/// {"size": [h, w], "probs": [...]} or {"size": [h, w], "values": [...]}.
RealGrid grid_from_json(const Json& doc, const std::string& where);

}  // namespace pseudoforge::io
