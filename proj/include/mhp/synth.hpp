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

// Seeded synthetic scenes and prediction corruption, for exercising the
// metric engine and the clustering step without trained models.

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "json.hpp"
#include "mhp/error.hpp"
#include "mhp/parallel.hpp"
#include "mhp/random.hpp"
#include "mhp/scene.hpp"

namespace mhp {

enum class OverlapMode {
  kDisjoint,  // boxes never intersect
  kMild,      // pairwise box IoU at most 0.3
  kHeavy,     // every person after the first has box IoU >= 0.2 with an earlier one
};

inline OverlapMode parse_overlap_mode(const std::string& s) {
  if (s == "disjoint") return OverlapMode::kDisjoint;
  if (s == "mild") return OverlapMode::kMild;
  if (s == "heavy") return OverlapMode::kHeavy;
  throw DomainError("unknown overlap mode '" + s + "'");
}

struct IntRange {
  int lo = 0;
  int hi = 0;
};

struct SynthConfig {
  std::uint64_t seed = 0;
  std::size_t image_count = 10;
  ImageSize grid{64, 64};
  IntRange instances_per_image{2, 5};
  IntRange parts_per_instance{1, 4};
  OverlapMode overlap = OverlapMode::kDisjoint;
  std::vector<Category> category_pool = default_pool();
  std::string id_prefix = "synth";

  static std::vector<Category> default_pool() {
    std::vector<Category> pool;
    for (int c = 1; c <= 58; ++c) pool.push_back(static_cast<Category>(c));
    return pool;
  }

  void check() const {
    if (grid.width < 8 || grid.height < 8) throw DomainError("synth: grid must be at least 8x8");
    if (grid.width > 65535 || grid.height > 65535) throw DomainError("synth: grid too large");
    if (instances_per_image.lo < 0 || instances_per_image.lo > instances_per_image.hi) {
      throw DomainError("synth: empty instances_per_image range");
    }
    if (parts_per_instance.lo < 1 || parts_per_instance.lo > parts_per_instance.hi) {
      throw DomainError("synth: empty parts_per_instance range");
    }
    if (category_pool.empty()) throw DomainError("synth: empty category pool");
    for (Category c : category_pool) {
      if (c == kBackground) throw DomainError("synth: category pool contains background");
    }
    if (static_cast<std::size_t>(parts_per_instance.hi) > category_pool.size()) {
      throw DomainError("synth: more parts per instance than pool categories");
    }
    if (parts_per_instance.hi > grid.height) {
      throw DomainError("synth: more parts per instance than grid rows");
    }
  }
};

namespace detail {

struct SizeBounds {
  int lo;
  int hi;
};

inline SizeBounds box_side_bounds(int extent, OverlapMode mode, int min_side) {
  SizeBounds b{};
  switch (mode) {
    case OverlapMode::kDisjoint: b = {extent / 8, extent / 3}; break;
    case OverlapMode::kMild: b = {extent / 6, extent / 2}; break;
    case OverlapMode::kHeavy: b = {extent / 4, (2 * extent) / 3}; break;
  }
  b.lo = std::max({b.lo, min_side, 1});
  b.hi = std::min(std::max(b.hi, b.lo), extent);
  return b;
}

inline bool placement_ok(const BoundingBox& box, const std::vector<BoundingBox>& placed,
                         OverlapMode mode) {
  double best = 0.0;
  for (const auto& other : placed) {
    if (other == box) return false;
    const double iou = box_iou(box, other);
    if (mode == OverlapMode::kDisjoint && iou > 0.0) return false;
    if (mode == OverlapMode::kMild && iou > 0.3) return false;
    best = std::max(best, iou);
  }
  if (mode == OverlapMode::kHeavy && !placed.empty() && best < 0.2) return false;
  return true;
}

inline bool try_generate_scene(Rng& rng, const SynthConfig& cfg, std::size_t count,
                               SceneAnnotation& scene) {
  constexpr int kTriesPerInstance = 500;
  std::vector<BoundingBox> placed;
  scene.instances.clear();
  for (std::size_t i = 0; i < count; ++i) {
    const int parts = rng.between(cfg.parts_per_instance.lo, cfg.parts_per_instance.hi);
    const SizeBounds wb = box_side_bounds(cfg.grid.width, cfg.overlap, 1);
    const SizeBounds hb = box_side_bounds(cfg.grid.height, cfg.overlap, parts);
    bool done = false;
    BoundingBox box{};
    for (int attempt = 0; attempt < kTriesPerInstance && !done; ++attempt) {
      const int w = rng.between(wb.lo, wb.hi);
      const int h = rng.between(hb.lo, hb.hi);
      const int x = rng.between(0, cfg.grid.width - w);
      const int y = rng.between(0, cfg.grid.height - h);
      box = BoundingBox{x, y, x + w - 1, y + h - 1};
      done = placement_ok(box, placed, cfg.overlap);
    }
    if (!done) return false;
    placed.push_back(box);

    // Distinct categories for the bands.
    std::vector<Category> pool = cfg.category_pool;
    for (int j = 0; j < parts; ++j) {
      const auto pick = static_cast<std::size_t>(j) +
                        static_cast<std::size_t>(rng.below(pool.size() - static_cast<std::size_t>(j)));
      std::swap(pool[static_cast<std::size_t>(j)], pool[pick]);
    }
    InstanceMask mask(cfg.grid, kBackground);
    const int h = box.height();
    for (int j = 0; j < parts; ++j) {
      const int y0 = box.y_top + j * h / parts;
      const int y1 = box.y_top + (j + 1) * h / parts;
      for (int y = y0; y < y1; ++y) {
        for (int x = box.x_left; x <= box.x_right; ++x) mask.at(x, y) = pool[static_cast<std::size_t>(j)];
      }
    }
    scene.instances.push_back(std::move(mask));
  }
  return true;
}

}  // namespace detail

inline std::string synth_image_id(const SynthConfig& cfg, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%05zu", index);
  return cfg.id_prefix + buf;
}

// Image i depends only on (seed, i), so scenes are identical regardless of
// image_count or the number of worker threads.
inline std::vector<SceneAnnotation> synth_generate(const SynthConfig& cfg, unsigned jobs = 1) {
  cfg.check();
  std::vector<SceneAnnotation> out(cfg.image_count);
  parallel_for(cfg.image_count, jobs, [&](std::size_t i) {
    SceneAnnotation& scene = out[i];
    scene.image_id = synth_image_id(cfg, i);
    scene.size = cfg.grid;
    Rng rng(mix_seed(cfg.seed, scene.image_id));
    const auto count = static_cast<std::size_t>(
        rng.between(cfg.instances_per_image.lo, cfg.instances_per_image.hi));
    constexpr int kRestarts = 20;
    for (int r = 0; r < kRestarts; ++r) {
      if (detail::try_generate_scene(rng, cfg, count, scene)) return;
    }
    throw DomainError("placement failure at image " + std::to_string(i));
  });
  return out;
}

// ---------------------------------------------------------------------------
// Corruption

struct CorruptionSpec {
  int erode_radius = 0;
  double drop_prob = 0.0;
  double score_noise = 0.0;  // standard deviation
  double relabel_frac = 0.0;
  double merge_prob = 0.0;
  std::uint64_t seed = 0;
  // Relabeled pixels draw from categories 1..category_count-1.
  std::size_t category_count = 59;

  void check() const {
    auto prob = [](double p, const char* name) {
      if (!(p >= 0.0 && p <= 1.0)) throw DomainError(std::string("corruption: ") + name + " must lie in [0,1]");
    };
    prob(drop_prob, "drop_prob");
    prob(relabel_frac, "relabel_frac");
    prob(merge_prob, "merge_prob");
    if (erode_radius < 0) throw DomainError("corruption: erode_radius must be >= 0");
    if (!(score_noise >= 0.0)) throw DomainError("corruption: score_noise must be >= 0");
    if (category_count < 2 || category_count > 256) {
      throw DomainError("corruption: category_count must lie in [2, 256]");
    }
  }
};

inline CorruptionSpec corruption_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw DomainError("corruption spec must be a JSON object");
  CorruptionSpec s;
  for (const auto& [key, value] : j.items()) {
    if (key != "seed" && key != "erode_radius" && key != "category_count" && !value.is_number()) {
      throw DomainError("corruption spec: '" + key + "' must be a number");
    }
    if (key == "erode_radius") s.erode_radius = value.get<int>();
    else if (key == "drop_prob") s.drop_prob = value.get<double>();
    else if (key == "score_noise") s.score_noise = value.get<double>();
    else if (key == "relabel_frac") s.relabel_frac = value.get<double>();
    else if (key == "merge_prob") s.merge_prob = value.get<double>();
    else if (key == "seed") s.seed = value.get<std::uint64_t>();
    else if (key == "category_count") s.category_count = value.get<std::size_t>();
    else throw DomainError("corruption spec: unknown key '" + key + "'");
  }
  s.check();
  return s;
}

inline nlohmann::json corruption_to_json(const CorruptionSpec& s) {
  return {{"erode_radius", s.erode_radius}, {"drop_prob", s.drop_prob},
          {"score_noise", s.score_noise},   {"relabel_frac", s.relabel_frac},
          {"merge_prob", s.merge_prob},     {"seed", s.seed},
          {"category_count", s.category_count}};
}

// Morphological erosion of the foreground, 4-neighborhood, `radius`
// iterations. Pixels outside the image count as background. Surviving
// pixels keep their category.
inline InstanceMask erode(const InstanceMask& mask, int radius) {
  InstanceMask cur = mask;
  for (int r = 0; r < radius; ++r) {
    InstanceMask next = cur;
    for (int y = 0; y < cur.height(); ++y) {
      for (int x = 0; x < cur.width(); ++x) {
        if (cur.at(x, y) == kBackground) continue;
        const bool keep = x > 0 && x + 1 < cur.width() && y > 0 && y + 1 < cur.height() &&
                          cur.at(x - 1, y) != kBackground && cur.at(x + 1, y) != kBackground &&
                          cur.at(x, y - 1) != kBackground && cur.at(x, y + 1) != kBackground;
        if (!keep) next.at(x, y) = kBackground;
      }
    }
    cur = std::move(next);
  }
  return cur;
}

// Applies, in order: instance dropping, merging of consecutive survivors,
// erosion, per-pixel relabeling, then scores 1 - noise clamped to [0,1].
// Instances eroded to nothing are removed.
inline ScoredScene corrupt(const SceneAnnotation& gt, const CorruptionSpec& spec) {
  spec.check();
  Rng rng(mix_seed(spec.seed, gt.image_id));
  std::vector<InstanceMask> kept;
  for (const auto& m : gt.instances) {
    if (!rng.bernoulli(spec.drop_prob)) kept.push_back(m);
  }
  std::vector<InstanceMask> merged;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    InstanceMask m = kept[i];
    if (i + 1 < kept.size() && rng.bernoulli(spec.merge_prob)) {
      const InstanceMask& next = kept[i + 1];
      for (std::size_t p = 0; p < m.pixel_count(); ++p) {
        if (next[p] != kBackground) m[p] = next[p];
      }
      ++i;
    }
    merged.push_back(std::move(m));
  }
  ScoredScene out;
  out.scene.image_id = gt.image_id;
  out.scene.size = gt.size;
  for (auto& m : merged) {
    InstanceMask e = erode(m, spec.erode_radius);
    for (std::size_t p = 0; p < e.pixel_count(); ++p) {
      if (e[p] == kBackground || !rng.bernoulli(spec.relabel_frac)) continue;
      const auto others = static_cast<std::uint64_t>(spec.category_count - 2);
      if (others == 0) continue;
      auto c = static_cast<Category>(1 + rng.below(others));
      if (c >= e[p]) ++c;
      e[p] = c;
    }
    const double score = std::clamp(1.0 - spec.score_noise * rng.normal(), 0.0, 1.0);
    if (foreground_count(e) == 0) continue;
    out.scene.instances.push_back(std::move(e));
    out.scores.push_back(score);
  }
  return out;
}

}  // namespace mhp
