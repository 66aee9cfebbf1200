#include "pseudoforge/io.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <memory>
#include <set>
#include <sstream>

namespace pseudoforge::io {

namespace {

[[noreturn]] void schema_fail(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::SchemaError, where + ": " + what);
}

const Json& field(const Json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) schema_fail(where, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) schema_fail(where, std::string("missing field '") + key + "'");
  return *it;
}

const Json& array_field(const Json& obj, const char* key, const std::string& where) {
  const Json& a = field(obj, key, where);
  if (!a.is_array()) schema_fail(where + "." + key, "expected an array");
  return a;
}

double number(const Json& j, const std::string& where) {
  if (!j.is_number()) schema_fail(where, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) schema_fail(where, "expected a finite number");
  return v;
}

std::int64_t integer(const Json& j, const std::string& where) {
  if (!j.is_number_integer()) schema_fail(where, "expected an integer");
  return j.get<std::int64_t>();
}

std::string key_of(std::int64_t id) { return std::to_string(id); }

std::int64_t id_of_key(const std::string& key, const std::string& where) {
  char* end = nullptr;
  const long long v = std::strtoll(key.c_str(), &end, 10);
  if (key.empty() || end != key.c_str() + key.size()) schema_fail(where, "expected an integer key, got '" + key + "'");
  return v;
}

std::pair<int, int> size_pair(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) schema_fail(where, "expected [height, width]");
  const auto h = integer(j[0], where + "[0]");
  const auto w = integer(j[1], where + "[1]");
  if (h < 1 || w < 1 || h > (1 << 20) || w > (1 << 20)) schema_fail(where, "dimensions out of range");
  return {static_cast<int>(h), static_cast<int>(w)};
}

Box parse_box(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 4) schema_fail(where, "expected [x, y, w, h]");
  Box b{number(j[0], where + "[0]"), number(j[1], where + "[1]"), number(j[2], where + "[2]"),
        number(j[3], where + "[3]")};
  if (!(b.w > 0 && b.h > 0)) schema_fail(where, "box width and height must be positive");
  return b;
}

Json box_json(const Box& b) { return Json::array({round9(b.x), round9(b.y), round9(b.w), round9(b.h)}); }

std::vector<Category> parse_categories(const Json& doc) {
  std::vector<Category> cats;
  auto it = doc.find("categories");
  if (it == doc.end()) return cats;
  if (!it->is_array()) schema_fail("categories", "expected an array");
  for (std::size_t i = 0; i < it->size(); ++i) {
    const std::string where = "categories[" + std::to_string(i) + "]";
    const Json& c = (*it)[i];
    Category cat;
    cat.id = integer(field(c, "id", where), where + ".id");
    if (auto n = c.find("name"); n != c.end()) {
      if (!n->is_string()) schema_fail(where + ".name", "expected a string");
      cat.name = n->get<std::string>();
    }
    cats.push_back(std::move(cat));
  }
  return cats;
}

Json categories_json(const std::vector<Category>& cats) {
  Json out = Json::array();
  for (const auto& c : cats) out.push_back({{"id", c.id}, {"name", c.name}});
  return out;
}

Json images_json(const std::vector<ImageInfo>& images) {
  Json out = Json::array();
  for (const auto& img : images) out.push_back({{"id", img.id}, {"height", img.height}, {"width", img.width}});
  return out;
}

ProbMask parse_prob_mask(const Json& j, const std::string& where) {
  try {
    return ProbMask(grid_from_json(j, where));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SchemaError) throw;
    schema_fail(where, e.what());
  }
}

}  // namespace

double round9(double v) {
  if (!std::isfinite(v)) return v;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return std::strtod(buf, nullptr);
}

double round9_down(double v) {
  double r = round9(v);
  if (r > v && v > 0) {
    const double step = std::pow(10.0, std::floor(std::log10(v)) - 8);
    r = round9(v - step);
    while (r > v) r = round9(r - step);
  }
  return r;
}

std::string format9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json read_json(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    throw Error(ErrorCode::SchemaError, path.string() + " line " + std::to_string(line) + ": invalid JSON");
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

void write_json(const std::filesystem::path& path, const Json& doc, int indent) {
  write_text(path, doc.dump(indent) + "\n");
}

std::string sha256_file(const std::filesystem::path& path) {
  const std::string data = read_text(path);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw Error(ErrorCode::IoError, "sha256 failed for " + path.string());
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

bool TransformFilter::accepts(const Transform& t) const {
  const std::string name = to_string(t);
  for (const auto& a : accepted) {
    if (a == name || (a == "scale" && t.kind == TransformKind::Scale)) return true;
  }
  return false;
}

std::vector<ImageInfo> parse_images(const Json& doc) {
  const Json& arr = array_field(doc, "images", "document");
  std::vector<ImageInfo> images;
  std::set<ImageId> seen;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string where = "images[" + std::to_string(i) + "]";
    const Json& j = arr[i];
    ImageInfo img;
    img.id = integer(field(j, "id", where), where + ".id");
    const auto h = integer(field(j, "height", where), where + ".height");
    const auto w = integer(field(j, "width", where), where + ".width");
    if (h < 1 || w < 1 || h > (1 << 20) || w > (1 << 20)) schema_fail(where, "image size out of range");
    img.height = static_cast<int>(h);
    img.width = static_cast<int>(w);
    if (!seen.insert(img.id).second) schema_fail(where + ".id", "duplicate image id");
    images.push_back(img);
  }
  return images;
}

AnnotationDocument parse_annotations(const Json& doc) {
  AnnotationDocument out;
  out.images = parse_images(doc);
  out.categories = parse_categories(doc);
  std::map<ImageId, const ImageInfo*> by_id;
  for (const auto& img : out.images) by_id[img.id] = &img;

  const Json& arr = array_field(doc, "annotations", "document");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string where = "annotations[" + std::to_string(i) + "]";
    const Json& a = arr[i];
    GtInstance inst;
    inst.image_id = integer(field(a, "image_id", where), where + ".image_id");
    inst.category_id = integer(field(a, "category_id", where), where + ".category_id");
    inst.box = parse_box(field(a, "bbox", where), where + ".bbox");
    auto img = by_id.find(inst.image_id);
    if (img == by_id.end()) schema_fail(where + ".image_id", "unknown image " + key_of(inst.image_id));

    const std::string seg_where = where + ".segmentation";
    const Json& seg = field(a, "segmentation", where);
    const auto [h, w] = size_pair(field(seg, "size", seg_where), seg_where + ".size");
    if (h != img->second->height || w != img->second->width) {
      schema_fail(seg_where + ".size", "does not match the image size");
    }
    const Json& counts = array_field(seg, "counts", seg_where);
    RleMask rle{h, w, {}};
    for (std::size_t k = 0; k < counts.size(); ++k) {
      const auto v = integer(counts[k], seg_where + ".counts[" + std::to_string(k) + "]");
      if (v < 0 || v > std::numeric_limits<std::uint32_t>::max()) {
        schema_fail(seg_where + ".counts[" + std::to_string(k) + "]", "run length out of range");
      }
      rle.counts.push_back(static_cast<std::uint32_t>(v));
    }
    try {
      inst.mask = rle_decode(rle);
    } catch (const Error& e) {
      schema_fail(seg_where + ".counts", e.what());
    }
    double score = std::numeric_limits<double>::quiet_NaN();
    if (auto s = a.find("score"); s != a.end()) score = number(*s, where + ".score");
    out.scores.push_back(score);
    out.annotations.push_back(std::move(inst));
  }
  return out;
}

Json to_json(const AnnotationDocument& doc) {
  Json anns = Json::array();
  for (std::size_t i = 0; i < doc.annotations.size(); ++i) {
    const auto& a = doc.annotations[i];
    const RleMask rle = rle_encode(a.mask);
    Json j = {{"id", static_cast<std::int64_t>(i + 1)},
              {"image_id", a.image_id},
              {"category_id", a.category_id},
              {"bbox", box_json(a.box)},
              {"area", static_cast<std::int64_t>(a.mask.count())},
              {"segmentation", {{"size", {rle.height, rle.width}}, {"counts", rle.counts}}}};
    if (i < doc.scores.size() && std::isfinite(doc.scores[i])) j["score"] = round9(doc.scores[i]);
    anns.push_back(std::move(j));
  }
  return {{"images", images_json(doc.images)},
          {"categories", categories_json(doc.categories)},
          {"annotations", std::move(anns)}};
}

Json grid_to_json(const RealGrid& g) {
  Json values = Json::array();
  for (double v : g.values()) values.push_back(round9(v));
  return {{"size", {g.height(), g.width()}}, {"values", std::move(values)}};
}

RealGrid grid_from_json(const Json& doc, const std::string& where) {
  if (!doc.is_object()) schema_fail(where, "expected an object");
  const auto [h, w] = size_pair(field(doc, "size", where), where + ".size");
  const char* key = doc.contains("probs") ? "probs" : "values";
  const Json& arr = array_field(doc, key, where);
  if (arr.size() != static_cast<std::size_t>(h) * static_cast<std::size_t>(w)) {
    schema_fail(where + "." + key, "expected height*width values");
  }
  std::vector<double> values;
  values.reserve(arr.size());
  for (std::size_t k = 0; k < arr.size(); ++k) {
    values.push_back(number(arr[k], where + "." + key + "[" + std::to_string(k) + "]"));
  }
  return RealGrid(h, w, std::move(values));
}

PredictionDocument parse_predictions(const Json& doc, const TransformFilter& filter) {
  PredictionDocument out;
  if (doc.contains("images")) out.images = parse_images(doc);
  out.categories = parse_categories(doc);
  const Json& arr = array_field(doc, "detections", "document");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string where = "detections[" + std::to_string(i) + "]";
    const Json& d = arr[i];
    Detection det;
    det.image_id = integer(field(d, "image_id", where), where + ".image_id");
    det.category_id = integer(field(d, "category_id", where), where + ".category_id");
    det.score = number(field(d, "score", where), where + ".score");
    if (det.score < 0 || det.score > 1) schema_fail(where + ".score", "score must lie in [0,1]");
    det.box = parse_box(field(d, "bbox", where), where + ".bbox");
    if (auto tta = d.find("tta_masks"); tta != d.end()) {
      if (!tta->is_array() || tta->empty()) schema_fail(where + ".tta_masks", "expected a non-empty array");
      std::vector<ProbMask> maps;
      std::vector<Transform> transforms;
      for (std::size_t k = 0; k < tta->size(); ++k) {
        const std::string w = where + ".tta_masks[" + std::to_string(k) + "]";
        const Json& t = field((*tta)[k], "transform", w);
        if (!t.is_string()) schema_fail(w + ".transform", "expected a string");
        Transform tr;
        try {
          tr = parse_transform(t.get<std::string>());
        } catch (const Error& e) {
          schema_fail(w + ".transform", e.what());
        }
        if (!filter.accepts(tr)) schema_fail(w + ".transform", "transform not enabled by config");
        transforms.push_back(tr);
        maps.push_back(parse_prob_mask((*tta)[k], w));
      }
      try {
        det.mask = tta_fuse(maps, transforms);
      } catch (const Error& e) {
        schema_fail(where + ".tta_masks", e.what());
      }
    } else {
      det.mask = parse_prob_mask(field(d, "mask", where), where + ".mask");
    }
    out.detections.push_back(std::move(det));
  }
  return out;
}

Json to_json(const PredictionDocument& doc) {
  Json dets = Json::array();
  for (const auto& d : doc.detections) {
    Json probs = Json::array();
    for (double v : d.mask.values()) probs.push_back(round9(v));
    dets.push_back({{"image_id", d.image_id},
                    {"category_id", d.category_id},
                    {"score", round9(d.score)},
                    {"bbox", box_json(d.box)},
                    {"mask", {{"size", {d.mask.height(), d.mask.width()}}, {"probs", std::move(probs)}}}});
  }
  return {{"images", images_json(doc.images)},
          {"categories", categories_json(doc.categories)},
          {"detections", std::move(dets)}};
}

Json to_json(const LabeledStats& stats) {
  Json counts = Json::object(), rates = Json::object();
  for (const auto& [c, n] : stats.instances_per_category) {
    counts[key_of(c)] = n;
    rates[key_of(c)] = round9(stats.rate(c));
  }
  return {{"num_images", stats.num_images},
          {"instances_per_category", std::move(counts)},
          {"rates", std::move(rates)},
          {"fg_pixels", stats.fg_pixels},
          {"box_pixels", stats.box_pixels},
          {"fg_pixel_fraction", round9(stats.fg_pixel_fraction)}};
}

LabeledStats parse_stats(const Json& doc) {
  LabeledStats s;
  s.num_images = integer(field(doc, "num_images", "stats"), "stats.num_images");
  if (s.num_images < 1) schema_fail("stats.num_images", "must be >= 1");
  const Json& counts = field(doc, "instances_per_category", "stats");
  if (!counts.is_object()) schema_fail("stats.instances_per_category", "expected an object");
  for (auto it = counts.begin(); it != counts.end(); ++it) {
    const std::string where = "stats.instances_per_category." + it.key();
    const auto n = integer(it.value(), where);
    if (n < 0) schema_fail(where, "must be non-negative");
    s.instances_per_category[id_of_key(it.key(), where)] = n;
  }
  s.fg_pixels = integer(field(doc, "fg_pixels", "stats"), "stats.fg_pixels");
  s.box_pixels = integer(field(doc, "box_pixels", "stats"), "stats.box_pixels");
  if (s.fg_pixels < 0 || s.box_pixels < s.fg_pixels) schema_fail("stats", "inconsistent pixel counts");
  s.fg_pixel_fraction = s.box_pixels > 0 ? double(s.fg_pixels) / double(s.box_pixels) : 0.0;
  return s;
}

Json to_json(const ThresholdSet& set) {
  Json box = Json::object(), cats = Json::object();
  for (const auto& [c, t] : set.box) {
    box[key_of(c)] = t.degenerate ? 1.0 : round9_down(t.threshold);
    cats[key_of(c)] = {{"rate", round9(t.rate)},     {"target", t.target},
                       {"available", t.available},   {"kept", t.kept},
                       {"degenerate", t.degenerate}};
  }
  Json prov = {{"num_unlabeled_images", set.num_unlabeled_images},
               {"target_fg_fraction", round9(set.pixel.target_fraction)},
               {"achieved_fg_fraction", round9(set.pixel.achieved_fraction)},
               {"pooled_pixels", set.pixel.pooled},
               {"pixel_threshold_degenerate", set.pixel_degenerate},
               {"categories", std::move(cats)}};
  return {{"box_thresholds", std::move(box)},
          {"pixel_threshold", round9_down(set.pixel.threshold)},
          {"provenance", std::move(prov)}};
}

ThresholdSet parse_thresholds(const Json& doc) {
  ThresholdSet set;
  const Json& box = field(doc, "box_thresholds", "thresholds");
  if (!box.is_object()) schema_fail("thresholds.box_thresholds", "expected an object");
  const Json* cats = nullptr;
  if (auto p = doc.find("provenance"); p != doc.end() && p->is_object()) {
    if (auto c = p->find("categories"); c != p->end() && c->is_object()) cats = &*c;
    if (auto n = p->find("num_unlabeled_images"); n != p->end()) {
      set.num_unlabeled_images = integer(*n, "thresholds.provenance.num_unlabeled_images");
    }
    if (auto d = p->find("pixel_threshold_degenerate"); d != p->end() && d->is_boolean()) {
      set.pixel_degenerate = d->get<bool>();
    }
    if (auto v = p->find("target_fg_fraction"); v != p->end()) {
      set.pixel.target_fraction = number(*v, "thresholds.provenance.target_fg_fraction");
    }
    if (auto v = p->find("achieved_fg_fraction"); v != p->end()) {
      set.pixel.achieved_fraction = number(*v, "thresholds.provenance.achieved_fg_fraction");
    }
    if (auto v = p->find("pooled_pixels"); v != p->end()) {
      set.pixel.pooled = integer(*v, "thresholds.provenance.pooled_pixels");
    }
  }
  for (auto it = box.begin(); it != box.end(); ++it) {
    const std::string where = "thresholds.box_thresholds." + it.key();
    CategoryThreshold t;
    t.threshold = number(it.value(), where);
    if (t.threshold < 0 || t.threshold > 1) schema_fail(where, "threshold must lie in [0,1]");
    t.degenerate = false;
    if (cats && cats->contains(it.key())) {
      const Json& info = (*cats)[it.key()];
      if (auto d = info.find("degenerate"); d != info.end() && d->is_boolean()) t.degenerate = d->get<bool>();
      if (auto v = info.find("rate"); v != info.end()) t.rate = number(*v, where + ".rate");
      if (auto v = info.find("target"); v != info.end()) t.target = integer(*v, where + ".target");
      if (auto v = info.find("available"); v != info.end()) t.available = integer(*v, where + ".available");
      if (auto v = info.find("kept"); v != info.end()) t.kept = integer(*v, where + ".kept");
    }
    if (t.degenerate) t.threshold = kKeepNothing;
    set.box[id_of_key(it.key(), where)] = t;
  }
  set.pixel.threshold = number(field(doc, "pixel_threshold", "thresholds"), "thresholds.pixel_threshold");
  if (!(set.pixel.threshold > 0 && set.pixel.threshold < 1)) {
    schema_fail("thresholds.pixel_threshold", "must lie in (0,1)");
  }
  return set;
}

AnnotationDocument to_annotations(const PseudoLabelSet& set, const std::vector<Category>& categories) {
  AnnotationDocument doc;
  doc.images = set.images;
  doc.categories = categories;
  for (std::size_t i = 0; i < set.images.size(); ++i) {
    for (const auto& inst : set.instances[i]) {
      doc.annotations.push_back(GtInstance{set.images[i].id, inst.category_id, inst.box, rle_decode(inst.mask)});
      doc.scores.push_back(inst.score);
    }
  }
  return doc;
}

}  // namespace pseudoforge::io
