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

// Scoring engine for multi-human parsing: IoU primitives, greedy instance
// matching, AP^p / AP^p_vol / PCP / AP^r, interaction-intensity subsets and
// dataset statistics.
//
// All dataset-level entry points align predictions and ground truth by
// image id and walk images in ascending id order. Per-image overlap tables
// are computed once and reused for every threshold.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "mhp/error.hpp"
#include "mhp/parallel.hpp"
#include "mhp/report.hpp"
#include "mhp/scene.hpp"

namespace mhp {

// |a∩b| / |a∪b| from pixel counts. Both empty gives 1.
inline double iou_from_counts(std::uint64_t intersection, std::uint64_t a,
                              std::uint64_t b) {
  const std::uint64_t unite = a + b - intersection;
  if (unite == 0) return 1.0;
  return static_cast<double>(intersection) / static_cast<double>(unite);
}

// Pixel sets given as membership flags (non-zero = member) over one grid.
inline double mask_iou(std::span<const std::uint8_t> a,
                       std::span<const std::uint8_t> b) {
  if (a.size() != b.size()) throw DomainError("mask_iou: grid size mismatch");
  std::uint64_t na = 0, nb = 0, both = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool in_a = a[i] != 0, in_b = b[i] != 0;
    na += in_a;
    nb += in_b;
    both += in_a && in_b;
  }
  return iou_from_counts(both, na, nb);
}

// Which categories part-level IoU averages over.
enum class PartCategorySet {
  kUnion,        // present in prediction or ground truth
  kGroundTruth,  // present in ground truth only
};

enum class IouKind { kPart, kRegion };

struct PartIou {
  std::map<Category, double> per_category;
  double mean = 0.0;
};

namespace detail {

struct CategoryCount {
  Category category;
  std::uint32_t pixels;
};

// Sorted by category; background excluded.
inline std::vector<CategoryCount> category_histogram(const InstanceMask& mask) {
  std::array<std::uint32_t, 256> counts{};
  for (Category c : mask.pixels()) ++counts[c];
  std::vector<CategoryCount> out;
  for (unsigned c = 1; c < 256; ++c) {
    if (counts[c]) out.push_back({static_cast<Category>(c), counts[c]});
  }
  return out;
}

inline std::uint32_t lookup(const std::vector<CategoryCount>& hist, Category c) {
  auto it = std::lower_bound(
      hist.begin(), hist.end(), c,
      [](const CategoryCount& e, Category v) { return e.category < v; });
  return (it != hist.end() && it->category == c) ? it->pixels : 0;
}

inline std::uint64_t total(const std::vector<CategoryCount>& hist) {
  std::uint64_t n = 0;
  for (const auto& e : hist) n += e.pixels;
  return n;
}

}  // namespace detail

// Pairwise overlap statistics between the instances of a prediction scene
// and a ground-truth scene over the same grid.
class OverlapTable {
 public:
  OverlapTable(const SceneAnnotation& pred, const SceneAnnotation& gt,
               PartCategorySet set = PartCategorySet::kUnion)
      : preds_(pred.instances.size()), gts_(gt.instances.size()), set_(set) {
    if (preds_ && gts_ && pred.size != gt.size) {
      throw DomainError("size mismatch between prediction and ground truth for '" +
                        gt.image_id + "'");
    }
    for (const auto& m : pred.instances) {
      if (m.size() != pred.size) throw DomainError("size mismatch in prediction '" + pred.image_id + "'");
      pred_hist_.push_back(detail::category_histogram(m));
    }
    for (const auto& m : gt.instances) {
      if (m.size() != gt.size) throw DomainError("size mismatch in ground truth '" + gt.image_id + "'");
      gt_hist_.push_back(detail::category_histogram(m));
    }
    same_category_.resize(preds_ * gts_);
    region_inter_.assign(preds_ * gts_, 0);
    if (preds_ && gts_) accumulate(pred, gt);
    part_mean_.resize(preds_ * gts_);
    region_.resize(preds_ * gts_);
    for (std::size_t p = 0; p < preds_; ++p) {
      const std::uint64_t pred_fg = detail::total(pred_hist_[p]);
      for (std::size_t g = 0; g < gts_; ++g) {
        part_mean_[p * gts_ + g] = part(p, g).mean;
        region_[p * gts_ + g] = iou_from_counts(
            region_inter_[p * gts_ + g], pred_fg, detail::total(gt_hist_[g]));
      }
    }
  }

  std::size_t pred_count() const { return preds_; }
  std::size_t gt_count() const { return gts_; }

  double part_mean(std::size_t p, std::size_t g) const {
    return part_mean_[p * gts_ + g];
  }
  double region(std::size_t p, std::size_t g) const { return region_[p * gts_ + g]; }
  double iou(IouKind kind, std::size_t p, std::size_t g) const {
    return kind == IouKind::kPart ? part_mean(p, g) : region(p, g);
  }

  PartIou part(std::size_t p, std::size_t g) const {
    const auto& ph = pred_hist_[p];
    const auto& gh = gt_hist_[g];
    const auto& inter = same_category_[p * gts_ + g];
    std::vector<Category> cats;
    for (const auto& e : gh) cats.push_back(e.category);
    if (set_ == PartCategorySet::kUnion) {
      for (const auto& e : ph) cats.push_back(e.category);
      std::sort(cats.begin(), cats.end());
      cats.erase(std::unique(cats.begin(), cats.end()), cats.end());
    }
    PartIou out;
    double sum = 0.0;
    for (Category c : cats) {
      const double v = iou_from_counts(detail::lookup(inter, c),
                                       detail::lookup(ph, c), detail::lookup(gh, c));
      out.per_category[c] = v;
      sum += v;
    }
    out.mean = cats.empty() ? 0.0 : sum / static_cast<double>(cats.size());
    return out;
  }

  // Fraction of the ground-truth instance's categories whose IoU with the
  // prediction exceeds t.
  double correct_part_fraction(std::size_t p, std::size_t g, double t) const {
    const auto& gh = gt_hist_[g];
    if (gh.empty()) return 0.0;
    const auto& ph = pred_hist_[p];
    const auto& inter = same_category_[p * gts_ + g];
    std::size_t correct = 0;
    for (const auto& e : gh) {
      const double v = iou_from_counts(detail::lookup(inter, e.category),
                                       detail::lookup(ph, e.category), e.pixels);
      correct += v > t;
    }
    return static_cast<double>(correct) / static_cast<double>(gh.size());
  }

 private:
  void accumulate(const SceneAnnotation& pred, const SceneAnnotation& gt) {
    const std::size_t n = gt.size.area();
    std::vector<std::uint32_t> counts(preds_ * gts_ * 256, 0);
    std::vector<std::pair<std::size_t, Category>> gt_here;
    gt_here.reserve(gts_);
    for (std::size_t i = 0; i < n; ++i) {
      gt_here.clear();
      for (std::size_t g = 0; g < gts_; ++g) {
        const Category c = gt.instances[g][i];
        if (c != kBackground) gt_here.emplace_back(g, c);
      }
      if (gt_here.empty()) continue;
      for (std::size_t p = 0; p < preds_; ++p) {
        const Category c = pred.instances[p][i];
        if (c == kBackground) continue;
        for (const auto& [g, gc] : gt_here) {
          ++region_inter_[p * gts_ + g];
          if (gc == c) ++counts[(p * gts_ + g) * 256 + c];
        }
      }
    }
    for (std::size_t k = 0; k < preds_ * gts_; ++k) {
      for (unsigned c = 1; c < 256; ++c) {
        if (counts[k * 256 + c]) {
          same_category_[k].push_back({static_cast<Category>(c), counts[k * 256 + c]});
        }
      }
    }
  }

  std::size_t preds_;
  std::size_t gts_;
  PartCategorySet set_;
  std::vector<std::vector<detail::CategoryCount>> pred_hist_;
  std::vector<std::vector<detail::CategoryCount>> gt_hist_;
  std::vector<std::vector<detail::CategoryCount>> same_category_;
  std::vector<std::uint64_t> region_inter_;
  std::vector<double> part_mean_;
  std::vector<double> region_;
};

// Category-averaged IoU of two person instances.
inline PartIou part_iou(const InstanceMask& pred, const InstanceMask& gt,
                        PartCategorySet set = PartCategorySet::kUnion) {
  if (pred.size() != gt.size()) throw DomainError("part_iou: size mismatch");
  SceneAnnotation a{"", pred.size(), {pred}};
  SceneAnnotation b{"", gt.size(), {gt}};
  return OverlapTable(a, b, set).part(0, 0);
}

// IoU of the two instances' whole foreground.
inline double region_iou(const InstanceMask& pred, const InstanceMask& gt) {
  if (pred.size() != gt.size()) throw DomainError("region_iou: size mismatch");
  std::uint64_t np = 0, ng = 0, both = 0;
  for (std::size_t i = 0; i < pred.pixel_count(); ++i) {
    const bool a = pred[i] != kBackground, b = gt[i] != kBackground;
    np += a;
    ng += b;
    both += a && b;
  }
  return iou_from_counts(both, np, ng);
}

// ---------------------------------------------------------------------------
// Matching

struct MatchResult {
  std::vector<MatchPair> pairs;  // in matching order
  std::vector<std::size_t> unmatched_preds;
  std::vector<std::size_t> unmatched_gts;
  double threshold = 0.0;
};

// Greedy assignment: predictions by descending score (ties: lower index
// first) each take the free ground truth of highest IoU (ties: lower
// index), provided that IoU is strictly above t.
template <typename IouFn>
MatchResult greedy_match(std::span<const double> scores, std::size_t gt_count,
                         IouFn&& iou, double t) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });
  MatchResult out;
  out.threshold = t;
  std::vector<bool> gt_taken(gt_count, false);
  std::vector<bool> pred_taken(scores.size(), false);
  for (std::size_t p : order) {
    std::size_t best = gt_count;
    double best_iou = -1.0;
    for (std::size_t g = 0; g < gt_count; ++g) {
      if (gt_taken[g]) continue;
      const double v = iou(p, g);
      if (v > best_iou) {
        best_iou = v;
        best = g;
      }
    }
    if (best < gt_count && best_iou > t) {
      gt_taken[best] = true;
      pred_taken[p] = true;
      out.pairs.push_back({p, best, best_iou});
    }
  }
  for (std::size_t p = 0; p < scores.size(); ++p) {
    if (!pred_taken[p]) out.unmatched_preds.push_back(p);
  }
  for (std::size_t g = 0; g < gt_count; ++g) {
    if (!gt_taken[g]) out.unmatched_gts.push_back(g);
  }
  return out;
}

inline MatchResult match_instances(const OverlapTable& table,
                                   std::span<const double> scores, IouKind kind,
                                   double t) {
  return greedy_match(scores, table.gt_count(),
                      [&](std::size_t p, std::size_t g) { return table.iou(kind, p, g); },
                      t);
}

inline MatchResult match_instances(const ScoredScene& preds,
                                   const SceneAnnotation& gts, IouKind kind,
                                   double t,
                                   PartCategorySet set = PartCategorySet::kUnion) {
  if (preds.scores.size() != preds.scene.instances.size()) {
    throw DomainError("score count does not match instance count");
  }
  OverlapTable table(preds.scene, gts, set);
  return match_instances(table, preds.scores, kind, t);
}

// ---------------------------------------------------------------------------
// Average precision

struct ScoredFlag {
  double score = 0.0;
  bool is_tp = false;
  std::string image_id;
  std::size_t pred_index = 0;
};

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
  double score = 0.0;
};

struct ApResult {
  double threshold = 0.0;
  double value = 0.0;
  std::vector<PrPoint> pr_points;
};

// All-point interpolated AP over detections pooled from a dataset.
// Ordering: score descending, then image id, then prediction index.
inline ApResult average_precision(std::vector<ScoredFlag> flags,
                                  std::size_t total_gt) {
  std::stable_sort(flags.begin(), flags.end(),
                   [](const ScoredFlag& a, const ScoredFlag& b) {
                     if (a.score != b.score) return a.score > b.score;
                     if (a.image_id != b.image_id) return a.image_id < b.image_id;
                     return a.pred_index < b.pred_index;
                   });
  ApResult out;
  out.pr_points.reserve(flags.size());
  std::size_t tp = 0;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    tp += flags[i].is_tp;
    const double recall =
        total_gt ? static_cast<double>(tp) / static_cast<double>(total_gt) : 0.0;
    const double precision = static_cast<double>(tp) / static_cast<double>(i + 1);
    out.pr_points.push_back({recall, precision, flags[i].score});
  }
  if (total_gt == 0) {
    out.value = flags.empty() ? 1.0 : 0.0;
    return out;
  }
  // Recall grows by 1/total_gt exactly at true positives, so the area is the
  // envelope summed over those steps.
  double envelope = 0.0;
  double area = 0.0;
  for (std::size_t i = flags.size(); i-- > 0;) {
    envelope = std::max(envelope, out.pr_points[i].precision);
    if (flags[i].is_tp) area += envelope;
  }
  out.value = area / static_cast<double>(total_gt);
  return out;
}

// ---------------------------------------------------------------------------
// Dataset-level metrics

struct EvalOptions {
  std::vector<double> thresholds = standard_thresholds();
  bool ap_p = true;
  bool pcp = true;
  bool ap_r = true;
  PartCategorySet part_set = PartCategorySet::kUnion;
  std::string subset = "all";
  bool traces = true;
  unsigned jobs = 1;
};

namespace detail {

struct PreparedImage {
  std::string image_id;
  std::vector<double> scores;
  OverlapTable table;
};

// Pairs predictions with ground truth by image id, in ascending id order.
inline std::vector<std::pair<const ScoredScene*, const SceneAnnotation*>> align(
    std::span<const ScoredScene> preds, std::span<const SceneAnnotation> gts) {
  std::map<std::string, const ScoredScene*> by_id;
  for (const auto& p : preds) {
    if (!by_id.emplace(p.scene.image_id, &p).second) {
      throw DomainError("dataset misalignment: duplicate prediction id '" +
                        p.scene.image_id + "'");
    }
  }
  std::vector<const SceneAnnotation*> sorted;
  for (const auto& g : gts) sorted.push_back(&g);
  std::sort(sorted.begin(), sorted.end(),
            [](auto* a, auto* b) { return a->image_id < b->image_id; });
  std::vector<std::pair<const ScoredScene*, const SceneAnnotation*>> out;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i && sorted[i]->image_id == sorted[i - 1]->image_id) {
      throw DomainError("dataset misalignment: duplicate ground-truth id '" +
                        sorted[i]->image_id + "'");
    }
    auto it = by_id.find(sorted[i]->image_id);
    if (it == by_id.end()) {
      throw DomainError("dataset misalignment: no prediction for '" +
                        sorted[i]->image_id + "'");
    }
    out.emplace_back(it->second, sorted[i]);
  }
  if (out.size() != preds.size()) {
    throw DomainError("dataset misalignment: predictions for ids absent from ground truth");
  }
  return out;
}

inline std::vector<PreparedImage> prepare(std::span<const ScoredScene> preds,
                                          std::span<const SceneAnnotation> gts,
                                          PartCategorySet set, unsigned jobs) {
  const auto pairs = align(preds, gts);
  std::vector<std::optional<PreparedImage>> slots(pairs.size());
  parallel_for(pairs.size(), jobs, [&](std::size_t i) {
    const ScoredScene& p = *pairs[i].first;
    if (p.scores.size() != p.scene.instances.size()) {
      throw DomainError("score count does not match instance count for '" +
                        p.scene.image_id + "'");
    }
    slots[i].emplace(PreparedImage{pairs[i].second->image_id, p.scores,
                                   OverlapTable(p.scene, *pairs[i].second, set)});
  });
  std::vector<PreparedImage> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

inline ApResult ap_from_prepared(const std::vector<PreparedImage>& images,
                                 IouKind kind, double t,
                                 std::vector<MatchResult>* matches = nullptr) {
  std::vector<ScoredFlag> flags;
  std::size_t total_gt = 0;
  for (const auto& img : images) {
    total_gt += img.table.gt_count();
    MatchResult m = match_instances(img.table, img.scores, kind, t);
    std::vector<bool> tp(img.scores.size(), false);
    for (const auto& pair : m.pairs) tp[pair.pred_index] = true;
    for (std::size_t p = 0; p < img.scores.size(); ++p) {
      flags.push_back({img.scores[p], tp[p], img.image_id, p});
    }
    if (matches) matches->push_back(std::move(m));
  }
  ApResult r = average_precision(std::move(flags), total_gt);
  r.threshold = t;
  return r;
}

inline double pcp_from_prepared(const std::vector<PreparedImage>& images, double t,
                                std::vector<std::vector<double>>* per_instance = nullptr) {
  double sum = 0.0;
  std::size_t total_gt = 0;
  for (const auto& img : images) {
    const MatchResult m = match_instances(img.table, img.scores, IouKind::kPart, t);
    std::vector<double> inst(img.table.gt_count(), 0.0);
    for (const auto& pair : m.pairs) {
      inst[pair.gt_index] = img.table.correct_part_fraction(pair.pred_index, pair.gt_index, t);
    }
    for (double v : inst) sum += v;
    total_gt += inst.size();
    if (per_instance) per_instance->push_back(std::move(inst));
  }
  return total_gt ? sum / static_cast<double>(total_gt) : 0.0;
}

}  // namespace detail

inline ApResult ap_p(std::span<const ScoredScene> preds,
                     std::span<const SceneAnnotation> gts, double t,
                     PartCategorySet set = PartCategorySet::kUnion) {
  return detail::ap_from_prepared(detail::prepare(preds, gts, set, 1), IouKind::kPart, t);
}

inline ApResult ap_r(std::span<const ScoredScene> preds,
                     std::span<const SceneAnnotation> gts, double t) {
  return detail::ap_from_prepared(
      detail::prepare(preds, gts, PartCategorySet::kUnion, 1), IouKind::kRegion, t);
}

// Mean AP^p over 0.1..0.9.
inline double ap_p_vol(std::span<const ScoredScene> preds,
                       std::span<const SceneAnnotation> gts,
                       PartCategorySet set = PartCategorySet::kUnion) {
  const auto images = detail::prepare(preds, gts, set, 1);
  double sum = 0.0;
  for (double t : standard_thresholds()) {
    sum += detail::ap_from_prepared(images, IouKind::kPart, t).value;
  }
  return sum / 9.0;
}

inline double ap_r_vol(std::span<const ScoredScene> preds,
                       std::span<const SceneAnnotation> gts) {
  const auto images = detail::prepare(preds, gts, PartCategorySet::kUnion, 1);
  double sum = 0.0;
  for (double t : standard_thresholds()) {
    sum += detail::ap_from_prepared(images, IouKind::kRegion, t).value;
  }
  return sum / 9.0;
}

// Mean over all ground-truth persons of the fraction of their categories
// parsed with IoU > t; unmatched persons count 0.
inline double pcp(std::span<const ScoredScene> preds,
                  std::span<const SceneAnnotation> gts, double t,
                  PartCategorySet set = PartCategorySet::kUnion) {
  return detail::pcp_from_prepared(detail::prepare(preds, gts, set, 1), t);
}

// Every selected metric at every threshold, plus matching traces.
inline MetricReport evaluate(std::span<const ScoredScene> preds,
                             std::span<const SceneAnnotation> gts,
                             const EvalOptions& options) {
  for (double t : options.thresholds) {
    if (!(t > 0.0 && t < 1.0)) throw DomainError("IoU threshold must lie in (0,1)");
  }
  const auto images = detail::prepare(preds, gts, options.part_set, options.jobs);
  MetricReport report;
  report.subset = options.subset;
  if (options.traces) {
    for (const auto& img : images) {
      ImageTrace trace;
      trace.image_id = img.image_id;
      trace.gt_count = img.table.gt_count();
      trace.pred_count = img.table.pred_count();
      report.per_image.push_back(std::move(trace));
    }
  }
  for (double t : options.thresholds) {
    if (options.ap_p) {
      std::vector<MatchResult> matches;
      report.ap_p[t] = detail::ap_from_prepared(images, IouKind::kPart, t, &matches).value;
      for (std::size_t i = 0; options.traces && i < images.size(); ++i) {
        report.per_image[i].ap_p_matches[t] = std::move(matches[i].pairs);
      }
    }
    if (options.ap_r) {
      std::vector<MatchResult> matches;
      report.ap_r[t] = detail::ap_from_prepared(images, IouKind::kRegion, t, &matches).value;
      for (std::size_t i = 0; options.traces && i < images.size(); ++i) {
        report.per_image[i].ap_r_matches[t] = std::move(matches[i].pairs);
      }
    }
    if (options.pcp) {
      std::vector<std::vector<double>> inst;
      report.pcp[t] = detail::pcp_from_prepared(images, t, &inst);
      for (std::size_t i = 0; options.traces && i < images.size(); ++i) {
        report.per_image[i].instance_pcp[t] = std::move(inst[i]);
      }
    }
  }
  if (is_standard_schedule(options.thresholds)) {
    auto mean9 = [](const std::map<double, double>& m) {
      double sum = 0.0;
      for (const auto& [t, v] : m) sum += v;
      return sum / 9.0;
    };
    if (options.ap_p) report.ap_p_vol = mean9(report.ap_p);
    if (options.ap_r) report.ap_r_vol = mean9(report.ap_r);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Interaction intensity and subsets

// Mean pairwise bounding-box IoU; 0 for scenes with fewer than two persons.
inline double interaction_intensity(const SceneAnnotation& scene) {
  const std::size_t n = scene.instances.size();
  if (n < 2) return 0.0;
  std::vector<BoundingBox> boxes;
  boxes.reserve(n);
  for (const auto& m : scene.instances) boxes.push_back(bounding_box(m));
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      sum += box_iou(boxes[i], boxes[j]);
      ++pairs;
    }
  }
  return sum / static_cast<double>(pairs);
}

// Ids of the top `percent` most interacting scenes, highest first (ties by
// id ascending); ceil(percent/100 * size) of them.
inline std::vector<std::string> select_subset(std::span<const SceneAnnotation> gts,
                                              double percent) {
  if (!(percent > 0.0 && percent <= 100.0)) {
    throw DomainError("subset percent must lie in (0, 100]");
  }
  std::vector<std::pair<double, std::string>> ranked;
  ranked.reserve(gts.size());
  for (const auto& s : gts) ranked.emplace_back(interaction_intensity(s), s.image_id);
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  const auto take = static_cast<std::size_t>(
      std::ceil(percent * static_cast<double>(gts.size()) / 100.0));
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min(take, ranked.size()); ++i) {
    out.push_back(ranked[i].second);
  }
  return out;
}

// Keeps the scenes whose ids are listed, preserving dataset order.
template <typename Scene>
std::vector<Scene> filter_by_ids(std::span<const Scene> scenes,
                                 const std::vector<std::string>& ids) {
  std::vector<std::string> sorted = ids;
  std::sort(sorted.begin(), sorted.end());
  std::vector<Scene> out;
  for (const auto& s : scenes) {
    const std::string& id = [&]() -> const std::string& {
      if constexpr (std::is_same_v<Scene, ScoredScene>) return s.scene.image_id;
      else return s.image_id;
    }();
    if (std::binary_search(sorted.begin(), sorted.end(), id)) out.push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dataset statistics

inline StatsReport dataset_stats(std::span<const SceneAnnotation> gts,
                                 const LabelSpec& spec) {
  if (gts.empty()) throw DomainError("dataset_stats: empty dataset");
  StatsReport r;
  r.image_count = gts.size();
  r.category_names = spec.names();
  r.category_occurrences.assign(spec.count(), 0);
  r.category_pixels.assign(spec.count(), 0);
  r.min_instances = SIZE_MAX;
  r.min_resolution = gts.front().size;
  r.max_resolution = gts.front().size;
  std::uint64_t distinct_total = 0;
  double width_sum = 0.0, height_sum = 0.0;
  for (const auto& scene : gts) {
    const std::size_t n = scene.instances.size();
    r.instance_count += n;
    r.min_instances = std::min(r.min_instances, n);
    r.max_instances = std::max(r.max_instances, n);
    ++r.instance_histogram[n];
    std::array<bool, 256> in_image{};
    for (const auto& mask : scene.instances) {
      for (const auto& e : detail::category_histogram(mask)) {
        if (!spec.contains(e.category)) {
          throw DomainError("category out of range in '" + scene.image_id + "'");
        }
        ++r.category_occurrences[e.category];
        r.category_pixels[e.category] += e.pixels;
        in_image[e.category] = true;
      }
    }
    distinct_total += static_cast<std::uint64_t>(
        std::count(in_image.begin(), in_image.end(), true));
    auto smaller = [](ImageSize a, ImageSize b) {
      return a.area() != b.area() ? a.area() < b.area() : a.width < b.width;
    };
    if (smaller(scene.size, r.min_resolution)) r.min_resolution = scene.size;
    if (smaller(r.max_resolution, scene.size)) r.max_resolution = scene.size;
    width_sum += scene.size.width;
    height_sum += scene.size.height;
  }
  const double images = static_cast<double>(gts.size());
  r.mean_categories_per_image = static_cast<double>(distinct_total) / images;
  r.mean_instances_per_image = static_cast<double>(r.instance_count) / images;
  r.mean_width = width_sum / images;
  r.mean_height = height_sum / images;
  return r;
}

}  // namespace mhp
