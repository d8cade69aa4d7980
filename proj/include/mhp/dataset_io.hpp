// Copyright 2026 The mhpbench Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Readers and writers for every on-disk artifact:
//
//   {image_id}_{N}_{k}.png   one mask per person, k = 1..N, raw 8-bit ids
//   {image_id}.pred.json     {"image_id": str, "entries": [{"mask": str,
//                            "score": float}, ...]}
//   {image_id}.loc.f32       float32 little-endian, H x W x 4, row-major
//   {image_id}.count.txt     one decimal number
//
// and the JSON/CSV metric and statistics reports. All numeric text goes
// through std::to_chars / std::from_chars, so output does not depend on
// the process locale.

#pragma once

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"
#include "mhp/error.hpp"
#include "mhp/location.hpp"
#include "mhp/png_codec.hpp"
#include "mhp/report.hpp"
#include "mhp/scene.hpp"

namespace mhp {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Small text helpers

inline std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  out.close();
  if (!out) throw IoError("cannot write " + path.string());
}

inline void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create directory " + dir.string());
  }
}

// Shortest text that parses back to the same double.
inline std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

inline double parse_number(std::string_view text, const std::string& what) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw DomainError("malformed number in " + what);
  }
  return v;
}

// Threshold keys: two decimals ("0.50") unless more are needed to round-trip.
inline std::string format_threshold(double t) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), t, std::chars_format::fixed, 2);
  std::string two(buf, end);
  double back = 0.0;
  std::from_chars(two.data(), two.data() + two.size(), back);
  if (std::abs(back - t) <= 1e-12) return two;
  return format_number(t);
}

inline std::vector<std::string> read_id_list(const fs::path& path) {
  std::istringstream in(read_text_file(path));
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) ids.push_back(line);
  }
  return ids;
}

inline void write_id_list(const fs::path& path, const std::vector<std::string>& ids) {
  std::string text;
  for (const auto& id : ids) text += id + "\n";
  write_text_file(path, text);
}

// ---------------------------------------------------------------------------
// Dataset discovery

enum class Split { kTrain, kVal, kTest, kAll };

inline std::string to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
    case Split::kAll: return "all";
  }
  return "all";
}

inline Split parse_split(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  if (s == "all") return Split::kAll;
  throw DomainError("unknown split '" + s + "'");
}

struct MaskFile {
  std::size_t person_count;
  std::size_t self_index;
  fs::path path;
};

namespace detail {

inline const std::regex& mask_name_pattern() {
  static const std::regex re(R"(^(.+)_([0-9]+)_([0-9]+)\.png$)");
  return re;
}

// Masks may sit directly in `dir` or in a `parsing_annos` child.
inline fs::path mask_directory(const fs::path& dir) {
  const fs::path nested = dir / "parsing_annos";
  return fs::is_directory(nested) ? nested : dir;
}

inline void scan_masks(const fs::path& dir,
                       std::map<std::string, std::vector<MaskFile>>& index) {
  std::error_code ec;
  fs::directory_iterator it(dir, ec);
  if (ec) throw IoError("cannot read directory " + dir.string());
  for (const auto& entry : it) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    std::smatch m;
    if (!std::regex_match(name, m, mask_name_pattern())) continue;
    index[m[1].str()].push_back(
        {std::stoul(m[2].str()), std::stoul(m[3].str()), entry.path()});
  }
}

}  // namespace detail

// A directory of ground-truth (or ground-truth-style) masks. With split
// kAll and a root holding train/val/test subdirectories, all present splits
// are merged; otherwise the root itself is scanned.
class DatasetHandle {
 public:
  static DatasetHandle open(const fs::path& root, Split split = Split::kAll,
                            LabelSpec labels = LabelSpec::mhp_v2(),
                            bool strict = false) {
    if (!fs::is_directory(root)) throw IoError("not a directory: " + root.string());
    DatasetHandle h(root, split, std::move(labels), strict);
    std::vector<std::pair<std::string, fs::path>> dirs;
    if (split != Split::kAll) {
      dirs.emplace_back(to_string(split), root / to_string(split));
      if (!fs::is_directory(dirs.back().second)) {
        throw IoError("missing split directory " + dirs.back().second.string());
      }
    } else {
      for (const char* s : {"train", "val", "test"}) {
        if (fs::is_directory(root / s)) dirs.emplace_back(s, root / s);
      }
      if (dirs.empty()) dirs.emplace_back("", root);
    }
    for (const auto& [name, dir] : dirs) {
      std::map<std::string, std::vector<MaskFile>> local;
      detail::scan_masks(detail::mask_directory(dir), local);
      if (!name.empty()) h.split_sizes_[name] = local.size();
      for (auto& [id, files] : local) {
        if (!h.files_.emplace(id, std::move(files)).second) {
          throw DomainError("image id '" + id + "' appears in more than one split");
        }
      }
    }
    for (const auto& [id, files] : h.files_) h.image_ids_.push_back(id);
    return h;
  }

  const fs::path& root() const { return root_; }
  Split split() const { return split_; }
  const LabelSpec& labels() const { return labels_; }
  bool strict() const { return strict_; }
  // Sorted, unique.
  const std::vector<std::string>& image_ids() const { return image_ids_; }
  const std::map<std::string, std::size_t>& split_sizes() const { return split_sizes_; }
  bool contains(const std::string& id) const { return files_.count(id) != 0; }

  const std::vector<MaskFile>& files(const std::string& image_id) const {
    auto it = files_.find(image_id);
    if (it == files_.end()) throw IoError("no masks for image id '" + image_id + "'");
    return it->second;
  }

 private:
  DatasetHandle(fs::path root, Split split, LabelSpec labels, bool strict)
      : root_(std::move(root)), split_(split), labels_(std::move(labels)), strict_(strict) {}

  fs::path root_;
  Split split_;
  LabelSpec labels_;
  bool strict_;
  std::map<std::string, std::vector<MaskFile>> files_;
  std::vector<std::string> image_ids_;
  std::map<std::string, std::size_t> split_sizes_;
};

// ---------------------------------------------------------------------------
// Scenes

inline SceneAnnotation load_scene(const DatasetHandle& handle,
                                  const std::string& image_id) {
  std::vector<MaskFile> files = handle.files(image_id);
  const std::size_t n = files.front().person_count;
  for (const auto& f : files) {
    if (f.person_count != n) {
      throw DomainError("inconsistent person count for '" + image_id + "'");
    }
  }
  std::sort(files.begin(), files.end(),
            [](const MaskFile& a, const MaskFile& b) { return a.self_index < b.self_index; });
  for (const auto& f : files) {
    if (f.self_index < 1 || f.self_index > n) {
      throw DomainError("instance index " + std::to_string(f.self_index) +
                        " out of range for '" + image_id + "'");
    }
  }
  for (std::size_t i = 1; i < files.size(); ++i) {
    // Same (N, k) under different zero padding.
    if (files[i].self_index == files[i - 1].self_index) {
      throw DomainError("duplicate instance index for '" + image_id + "'");
    }
  }
  if (files.size() != n) {
    throw DomainError("incomplete instance set for '" + image_id + "'");
  }
  SceneAnnotation scene;
  scene.image_id = image_id;
  for (const auto& f : files) {
    InstanceMask mask = read_mask_png(f.path);
    if (scene.instances.empty()) {
      scene.size = mask.size();
    } else if (mask.size() != scene.size) {
      throw DomainError("size mismatch in '" + image_id + "': " + f.path.filename().string());
    }
    scene.instances.push_back(std::move(mask));
  }
  require_valid(scene, handle.labels(), handle.strict());
  return scene;
}

inline std::vector<SceneAnnotation> load_dataset(const DatasetHandle& handle) {
  std::vector<SceneAnnotation> out;
  out.reserve(handle.image_ids().size());
  for (const auto& id : handle.image_ids()) out.push_back(load_scene(handle, id));
  return out;
}

inline std::string mask_file_name(const std::string& image_id, std::size_t n,
                                  std::size_t k) {
  return image_id + "_" + std::to_string(n) + "_" + std::to_string(k) + ".png";
}

// Writes one PNG per instance; returns the paths in instance order.
inline std::vector<fs::path> save_scene(const SceneAnnotation& scene,
                                        const fs::path& dir) {
  if (scene.instances.empty()) return {};
  ensure_directory(dir);
  std::vector<fs::path> out;
  const std::size_t n = scene.instances.size();
  for (std::size_t k = 1; k <= n; ++k) {
    const fs::path path = dir / mask_file_name(scene.image_id, n, k);
    write_mask_png(scene.instances[k - 1], path);
    out.push_back(path);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Predictions

inline fs::path manifest_path(const fs::path& dir, const std::string& image_id) {
  return dir / (image_id + ".pred.json");
}

// Masks in manifest order with their scores. A manifest with no entries
// yields an empty scene of size `size_hint` (or 1x1 when absent).
inline ScoredScene load_predictions(const fs::path& dir, const std::string& image_id,
                                    const LabelSpec& labels = LabelSpec::mhp_v2(),
                                    std::optional<ImageSize> size_hint = std::nullopt) {
  const fs::path path = manifest_path(dir, image_id);
  const std::string text = read_text_file(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DomainError("malformed prediction manifest " + path.string() + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("entries") || !doc["entries"].is_array()) {
    throw DomainError("prediction manifest " + path.string() + " lacks an entries array");
  }
  if (doc.contains("image_id") && doc["image_id"] != image_id) {
    throw DomainError("prediction manifest " + path.string() + " names a different image id");
  }
  std::vector<std::pair<std::string, double>> entries;
  for (const auto& e : doc["entries"]) {
    if (!e.is_object() || !e.contains("mask") || !e["mask"].is_string() ||
        !e.contains("score") || !e["score"].is_number()) {
      throw DomainError("malformed entry in " + path.string());
    }
    const double score = e["score"].get<double>();
    if (!(score >= 0.0 && score <= 1.0)) {
      throw DomainError("score out of range in " + path.string());
    }
    entries.emplace_back(e["mask"].get<std::string>(), score);
  }
  ScoredScene out;
  out.scene.image_id = image_id;
  out.scene.size = size_hint.value_or(ImageSize{1, 1});
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const fs::path mask_path = fs::path(entries[i].first).is_absolute()
                                   ? fs::path(entries[i].first)
                                   : dir / entries[i].first;
    InstanceMask mask = read_mask_png(mask_path);
    if (i == 0) {
      out.scene.size = mask.size();
    } else if (mask.size() != out.scene.size) {
      throw DomainError("size mismatch in predictions for '" + image_id + "'");
    }
    out.scene.instances.push_back(std::move(mask));
    out.scores.push_back(entries[i].second);
  }
  if (auto v = validate(out, labels); !v.empty()) throw DomainError(describe(v));
  return out;
}

// Masks use the ground-truth naming; the manifest lists them in order.
inline std::vector<fs::path> save_predictions(const ScoredScene& scored,
                                              const fs::path& dir) {
  ensure_directory(dir);
  std::vector<fs::path> out = save_scene(scored.scene, dir);
  nlohmann::json doc;
  doc["image_id"] = scored.scene.image_id;
  doc["entries"] = nlohmann::json::array();
  for (std::size_t i = 0; i < out.size(); ++i) {
    doc["entries"].push_back(
        {{"mask", out[i].filename().string()}, {"score", scored.scores.at(i)}});
  }
  const fs::path path = manifest_path(dir, scored.scene.image_id);
  write_text_file(path, doc.dump(2) + "\n");
  out.push_back(path);
  return out;
}

// Predictions for the given ids. Images without a manifest fall back to
// ground-truth-style masks in `dir`, each scored 1.0, so a ground-truth
// directory can be evaluated against itself.
inline std::vector<ScoredScene> load_prediction_set(
    const fs::path& dir, const std::vector<std::string>& ids,
    const LabelSpec& labels = LabelSpec::mhp_v2(),
    const std::map<std::string, ImageSize>& size_hints = {}) {
  std::optional<DatasetHandle> masks;
  std::vector<ScoredScene> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    std::optional<ImageSize> hint;
    if (auto it = size_hints.find(id); it != size_hints.end()) hint = it->second;
    if (fs::exists(manifest_path(dir, id))) {
      out.push_back(load_predictions(dir, id, labels, hint));
      continue;
    }
    if (!masks) masks = DatasetHandle::open(dir, Split::kAll, labels, false);
    if (!masks->contains(id)) {
      throw IoError("no predictions for image id '" + id + "' in " + dir.string());
    }
    out.push_back(with_uniform_scores(load_scene(*masks, id), 1.0));
  }
  return out;
}

// Ids with a prediction manifest in `dir`, sorted.
inline std::vector<std::string> list_prediction_ids(const fs::path& dir) {
  std::vector<std::string> ids;
  std::error_code ec;
  fs::directory_iterator it(dir, ec);
  if (ec) throw IoError("cannot read directory " + dir.string());
  const std::string suffix = ".pred.json";
  for (const auto& entry : it) {
    const std::string name = entry.path().filename().string();
    if (name.size() > suffix.size() &&
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
      ids.push_back(name.substr(0, name.size() - suffix.size()));
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

// ---------------------------------------------------------------------------
// Location maps and instance counts

namespace detail {

inline std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  }
}

}  // namespace detail

inline std::string encode_location_map(const LocationMap& map) {
  std::string bytes(map.data().size() * 4, '\0');
  for (std::size_t i = 0; i < map.data().size(); ++i) {
    const std::uint32_t word =
        detail::to_little_endian(std::bit_cast<std::uint32_t>(map.data()[i]));
    std::memcpy(bytes.data() + i * 4, &word, 4);
  }
  return bytes;
}

inline LocationMap decode_location_map(std::string_view bytes, ImageSize size) {
  const std::size_t expected = size.area() * LocationMap::kChannels * 4;
  if (bytes.size() < expected) {
    throw DomainError("truncated location map (" + std::to_string(bytes.size()) +
                      " of " + std::to_string(expected) + " bytes)");
  }
  if (bytes.size() > expected) {
    throw DomainError("location map length mismatch (" + std::to_string(bytes.size()) +
                      " bytes, expected " + std::to_string(expected) + ")");
  }
  std::vector<float> data(expected / 4);
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::uint32_t word;
    std::memcpy(&word, bytes.data() + i * 4, 4);
    data[i] = std::bit_cast<float>(detail::to_little_endian(word));
  }
  return LocationMap(size, std::move(data));
}

inline LocationMap load_location_map(const fs::path& path, ImageSize size) {
  return decode_location_map(read_text_file(path), size);
}

inline void save_location_map(const LocationMap& map, const fs::path& path) {
  write_text_file(path, encode_location_map(map));
}

inline double read_instance_count(const fs::path& path) {
  const double v = parse_number(read_text_file(path), path.string());
  if (!std::isfinite(v)) throw DomainError("non-finite instance count in " + path.string());
  return v;
}

inline void write_instance_count(const fs::path& path, double count) {
  write_text_file(path, format_number(count) + "\n");
}

// ---------------------------------------------------------------------------
// Reports

enum class ReportFormat { kJson, kCsv };

namespace detail {

inline nlohmann::json threshold_map(const std::map<double, double>& m) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [t, v] : m) out[format_threshold(t)] = v;
  return out;
}

inline nlohmann::json match_list(const std::vector<MatchPair>& pairs) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& p : pairs) out.push_back({p.pred_index, p.gt_index, p.iou});
  return out;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

inline nlohmann::json report_to_json(const MetricReport& r) {
  nlohmann::json doc = nlohmann::json::object();
  doc["subset"] = r.subset;
  if (!r.ap_p.empty()) doc["ap_p"] = detail::threshold_map(r.ap_p);
  if (r.ap_p_vol) doc["ap_p_vol"] = *r.ap_p_vol;
  if (!r.pcp.empty()) doc["pcp"] = detail::threshold_map(r.pcp);
  if (!r.ap_r.empty()) doc["ap_r"] = detail::threshold_map(r.ap_r);
  if (r.ap_r_vol) doc["ap_r_vol"] = *r.ap_r_vol;
  nlohmann::json images = nlohmann::json::array();
  for (const auto& img : r.per_image) {
    nlohmann::json j = nlohmann::json::object();
    j["image_id"] = img.image_id;
    j["gt_count"] = img.gt_count;
    j["pred_count"] = img.pred_count;
    if (!img.ap_p_matches.empty()) {
      nlohmann::json m = nlohmann::json::object();
      for (const auto& [t, pairs] : img.ap_p_matches) m[format_threshold(t)] = detail::match_list(pairs);
      j["ap_p_matches"] = std::move(m);
    }
    if (!img.ap_r_matches.empty()) {
      nlohmann::json m = nlohmann::json::object();
      for (const auto& [t, pairs] : img.ap_r_matches) m[format_threshold(t)] = detail::match_list(pairs);
      j["ap_r_matches"] = std::move(m);
    }
    if (!img.instance_pcp.empty()) {
      nlohmann::json m = nlohmann::json::object();
      for (const auto& [t, values] : img.instance_pcp) m[format_threshold(t)] = values;
      j["instance_pcp"] = std::move(m);
    }
    images.push_back(std::move(j));
  }
  doc["per_image"] = std::move(images);
  return doc;
}

// Deterministic bytes: JSON with sorted keys, or CSV with the fixed columns
// metric,threshold,value,subset (volume rows leave threshold empty).
inline std::string write_report(const MetricReport& r, ReportFormat format) {
  if (format == ReportFormat::kJson) return report_to_json(r).dump(2) + "\n";
  const std::string subset = detail::csv_field(r.subset);
  std::string out = "metric,threshold,value,subset\n";
  auto rows = [&](const char* name, const std::map<double, double>& m) {
    for (const auto& [t, v] : m) {
      out += std::string(name) + "," + format_threshold(t) + "," +
             nlohmann::json(v).dump() + "," + subset + "\n";
    }
  };
  auto single = [&](const char* name, const std::optional<double>& v) {
    if (v) out += std::string(name) + ",," + nlohmann::json(*v).dump() + "," + subset + "\n";
  };
  rows("ap_p", r.ap_p);
  single("ap_p_vol", r.ap_p_vol);
  rows("pcp", r.pcp);
  rows("ap_r", r.ap_r);
  single("ap_r_vol", r.ap_r_vol);
  return out;
}

inline std::string write_stats(const StatsReport& s) {
  nlohmann::json doc = nlohmann::json::object();
  doc["image_count"] = s.image_count;
  doc["instance_count"] = s.instance_count;
  doc["split_sizes"] = s.split_sizes;
  nlohmann::json cats = nlohmann::json::array();
  for (std::size_t c = 1; c < s.category_names.size(); ++c) {
    cats.push_back({{"id", c},
                    {"name", s.category_names[c]},
                    {"occurrences", s.category_occurrences[c]},
                    {"pixels", s.category_pixels[c]}});
  }
  doc["categories"] = std::move(cats);
  doc["mean_categories_per_image"] = s.mean_categories_per_image;
  doc["mean_instances_per_image"] = s.mean_instances_per_image;
  doc["min_instances"] = s.min_instances;
  doc["max_instances"] = s.max_instances;
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [n, count] : s.instance_histogram) hist[std::to_string(n)] = count;
  doc["instance_histogram"] = std::move(hist);
  doc["resolution"] = {
      {"min", {s.min_resolution.width, s.min_resolution.height}},
      {"max", {s.max_resolution.width, s.max_resolution.height}},
      {"mean", {s.mean_width, s.mean_height}},
  };
  return doc.dump(2) + "\n";
}

}  // namespace mhp
