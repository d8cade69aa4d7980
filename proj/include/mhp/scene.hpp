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

// Core domain types for multi-human parsing annotations: label sets, dense
// per-instance category masks, scenes and derived geometry.

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mhp/error.hpp"

namespace mhp {

using Category = std::uint8_t;
inline constexpr Category kBackground = 0;

struct ImageSize {
  int width = 0;
  int height = 0;

  std::size_t area() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  bool valid() const { return width >= 1 && height >= 1; }
  friend bool operator==(const ImageSize&, const ImageSize&) = default;
};

inline std::string to_string(ImageSize s) {
  return std::to_string(s.width) + "x" + std::to_string(s.height);
}

// Zero-based, inclusive corners.
struct BoundingBox {
  int x_left = 0;
  int y_top = 0;
  int x_right = 0;
  int y_bottom = 0;

  int width() const { return x_right - x_left + 1; }
  int height() const { return y_bottom - y_top + 1; }
  std::int64_t area() const {
    return static_cast<std::int64_t>(width()) * height();
  }
  bool contains(int x, int y) const {
    return x >= x_left && x <= x_right && y >= y_top && y <= y_bottom;
  }
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

// Dense row-major raster. The tag parameter keeps maps with different
// meanings (instance mask, semantic map, labeling) from mixing silently.
template <typename T, typename Tag>
class Raster {
 public:
  using value_type = T;

  Raster() = default;
  explicit Raster(ImageSize size, T fill = T{})
      : size_(size), data_(size.area(), fill) {}
  Raster(ImageSize size, std::vector<T> data)
      : size_(size), data_(std::move(data)) {
    if (data_.size() != size_.area()) {
      throw DomainError("raster data length " + std::to_string(data_.size()) +
                        " does not match size " + to_string(size_));
    }
  }

  ImageSize size() const { return size_; }
  int width() const { return size_.width; }
  int height() const { return size_.height; }
  std::size_t pixel_count() const { return data_.size(); }

  T& at(int x, int y) { return data_[index(x, y)]; }
  const T& at(int x, int y) const { return data_[index(x, y)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> pixels() { return data_; }
  std::span<const T> pixels() const { return data_; }

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(size_.width) +
           static_cast<std::size_t>(x);
  }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  ImageSize size_{};
  std::vector<T> data_;
};

struct InstanceMaskTag {};
struct SemanticMapTag {};

// Per-person category map; other persons count as background.
using InstanceMask = Raster<Category, InstanceMaskTag>;
// Instance-agnostic category map.
using SemanticMap = Raster<Category, SemanticMapTag>;

template <typename To, typename From>
To retag(const From& from) {
  return To(from.size(),
            std::vector<typename To::value_type>(from.pixels().begin(),
                                                 from.pixels().end()));
}

// ---------------------------------------------------------------------------
// Label sets

namespace detail {
inline const std::vector<std::string>& mhp_v2_names() {
  static const std::vector<std::string> names = {
      "background",
      "cap/hat",
      "helmet",
      "face",
      "hair",
      "left-arm",
      "right-arm",
      "left-hand",
      "right-hand",
      "protector",
      "bikini/bra",
      "jacket/windbreaker/hoodie",
      "t-shirt",
      "polo-shirt",
      "sweater",
      "singlet",
      "torso-skin",
      "pants",
      "shorts/swim-shorts",
      "skirt",
      "stockings",
      "socks",
      "left-boot",
      "right-boot",
      "left-shoe",
      "right-shoe",
      "left-highheel",
      "right-highheel",
      "left-sandal",
      "right-sandal",
      "left-leg",
      "right-leg",
      "left-foot",
      "right-foot",
      "coat",
      "dress",
      "robe",
      "jumpsuits",
      "other-full-body-clothes",
      "headwear",
      "backpack",
      "ball",
      "bats",
      "belt",
      "bottle",
      "carrybag",
      "cases",
      "sunglasses",
      "eyewear",
      "gloves",
      "scarf",
      "umbrella",
      "wallet/purse",
      "watch",
      "wristband",
      "tie",
      "other-accessaries",
      "other-upper-body-clothes",
      "other-lower-body-clothes",
  };
  return names;
}
}  // namespace detail

// Ordered category names; index is the category id, index 0 is background.
class LabelSpec {
 public:
  explicit LabelSpec(std::vector<std::string> names) : names_(std::move(names)) {
    if (names_.empty() || names_.front() != "background") {
      throw DomainError("label spec: entry 0 must be \"background\"");
    }
    if (names_.size() > 256) {
      throw DomainError("label spec: at most 256 categories are supported");
    }
    std::set<std::string> seen;
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (names_[i].empty()) {
        throw DomainError("label spec: empty name at line " + std::to_string(i));
      }
      if (!seen.insert(names_[i]).second) {
        throw DomainError("label spec: duplicate name \"" + names_[i] + "\"");
      }
    }
  }

  // 58 MHP v2.0 categories plus background.
  static LabelSpec mhp_v2() { return LabelSpec(detail::mhp_v2_names()); }

  // One name per line, line number is the id. Trailing '\r' and a final
  // empty line are tolerated.
  static LabelSpec parse(std::istream& in) {
    std::vector<std::string> names;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      names.push_back(line);
    }
    while (!names.empty() && names.back().empty()) names.pop_back();
    return LabelSpec(std::move(names));
  }

  static LabelSpec load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open label file " + path);
    return parse(in);
  }

  std::size_t count() const { return names_.size(); }
  const std::string& name(Category id) const { return names_.at(id); }
  const std::vector<std::string>& names() const { return names_; }
  bool contains(unsigned value) const { return value < names_.size(); }

 private:
  std::vector<std::string> names_;
};

// ---------------------------------------------------------------------------
// Scenes

struct SceneAnnotation {
  std::string image_id;
  ImageSize size{};
  // Annotation order (left to right); instance k of the file naming is
  // instances[k - 1].
  std::vector<InstanceMask> instances;

  std::size_t person_count() const { return instances.size(); }
  friend bool operator==(const SceneAnnotation&, const SceneAnnotation&) = default;
};

struct ScoredScene {
  SceneAnnotation scene;
  std::vector<double> scores;  // one per instance, in [0,1]

  std::size_t size() const { return scene.instances.size(); }
  friend bool operator==(const ScoredScene&, const ScoredScene&) = default;
};

inline ScoredScene with_uniform_scores(SceneAnnotation scene, double score) {
  std::vector<double> scores(scene.instances.size(), score);
  return ScoredScene{std::move(scene), std::move(scores)};
}

// Overlap area over union area, inclusive corners.
inline double box_iou(const BoundingBox& a, const BoundingBox& b) {
  const std::int64_t w = std::min(a.x_right, b.x_right) - std::max(a.x_left, b.x_left) + 1;
  const std::int64_t h = std::min(a.y_bottom, b.y_bottom) - std::max(a.y_top, b.y_top) + 1;
  const std::int64_t overlap = (w > 0 && h > 0) ? w * h : 0;
  return static_cast<double>(overlap) /
         static_cast<double>(a.area() + b.area() - overlap);
}

// Throws DomainError("empty instance") if the mask has no foreground.
inline BoundingBox bounding_box(const InstanceMask& mask) {
  int x0 = mask.width(), y0 = mask.height(), x1 = -1, y1 = -1;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask.at(x, y) == kBackground) continue;
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  if (x1 < 0) throw DomainError("empty instance");
  return BoundingBox{x0, y0, x1, y1};
}

inline std::size_t foreground_count(const InstanceMask& mask) {
  return static_cast<std::size_t>(
      std::count_if(mask.pixels().begin(), mask.pixels().end(),
                    [](Category c) { return c != kBackground; }));
}

// Instance-agnostic map; where instances overlap the later one wins.
inline SemanticMap flatten(const SceneAnnotation& scene) {
  if (!scene.size.valid()) {
    throw DomainError("invalid image size " + to_string(scene.size));
  }
  SemanticMap out(scene.size, kBackground);
  for (std::size_t i = 0; i < scene.instances.size(); ++i) {
    const InstanceMask& mask = scene.instances[i];
    if (mask.size() != scene.size) {
      throw DomainError("size mismatch: instance " + std::to_string(i + 1) +
                        " is " + to_string(mask.size()) + ", scene is " +
                        to_string(scene.size));
    }
    for (std::size_t p = 0; p < mask.pixel_count(); ++p) {
      if (mask[p] != kBackground) out[p] = mask[p];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Validation

enum class ViolationKind {
  kInvalidSize,
  kSizeMismatch,
  kCategoryOutOfRange,
  kEmptyInstance,
  kTooFewInstances,
  kScoreCount,
  kScoreOutOfRange,
};

struct Violation {
  ViolationKind kind;
  std::string message;
};

// Empty result iff every invariant holds. Strict mode adds the ground-truth
// rule that a scene holds at least two persons.
inline std::vector<Violation> validate(const SceneAnnotation& scene,
                                       const LabelSpec& spec, bool strict) {
  std::vector<Violation> out;
  const std::string where = "scene '" + scene.image_id + "': ";
  if (!scene.size.valid()) {
    out.push_back({ViolationKind::kInvalidSize,
                   where + "invalid image size " + to_string(scene.size)});
  }
  for (std::size_t i = 0; i < scene.instances.size(); ++i) {
    const InstanceMask& mask = scene.instances[i];
    const std::string inst = where + "instance " + std::to_string(i + 1) + ": ";
    if (mask.size() != scene.size) {
      out.push_back({ViolationKind::kSizeMismatch,
                     inst + "size mismatch (" + to_string(mask.size()) +
                         " vs " + to_string(scene.size) + ")"});
      continue;
    }
    bool any_foreground = false;
    unsigned worst = 0;
    for (Category c : mask.pixels()) {
      any_foreground = any_foreground || c != kBackground;
      worst = std::max<unsigned>(worst, c);
    }
    if (!spec.contains(worst)) {
      out.push_back({ViolationKind::kCategoryOutOfRange,
                     inst + "category out of range (" + std::to_string(worst) +
                         " >= " + std::to_string(spec.count()) + ")"});
    }
    if (!any_foreground) {
      out.push_back({ViolationKind::kEmptyInstance, inst + "empty instance"});
    }
  }
  if (strict && scene.instances.size() < 2) {
    out.push_back({ViolationKind::kTooFewInstances,
                   where + "fewer than two instances"});
  }
  return out;
}

inline std::vector<Violation> validate(const ScoredScene& scored,
                                       const LabelSpec& spec) {
  std::vector<Violation> out = validate(scored.scene, spec, false);
  if (scored.scores.size() != scored.scene.instances.size()) {
    out.push_back({ViolationKind::kScoreCount,
                   "scene '" + scored.scene.image_id + "': " +
                       std::to_string(scored.scores.size()) + " scores for " +
                       std::to_string(scored.scene.instances.size()) +
                       " instances"});
  }
  for (std::size_t i = 0; i < scored.scores.size(); ++i) {
    const double s = scored.scores[i];
    if (!(s >= 0.0 && s <= 1.0)) {
      out.push_back({ViolationKind::kScoreOutOfRange,
                     "scene '" + scored.scene.image_id + "': instance " +
                         std::to_string(i + 1) + ": score out of range"});
    }
  }
  return out;
}

inline std::string describe(const std::vector<Violation>& violations) {
  std::ostringstream out;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    if (i) out << "; ";
    out << violations[i].message;
  }
  return out.str();
}

inline void require_valid(const SceneAnnotation& scene, const LabelSpec& spec,
                          bool strict) {
  if (auto v = validate(scene, spec, strict); !v.empty()) {
    throw DomainError(describe(v));
  }
}

}  // namespace mhp
