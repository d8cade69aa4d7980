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

// Reference evaluator. A deliberately naive second implementation of
// AP^p, AP^p_vol, PCP and AP^r used to cross-check metrics.hpp: it recounts
// pixels for every query, walks the greedy matching literally, and builds
// an explicit precision/recall table. It must not include metrics.hpp.
//
// Limited to grids of at most 64x64 and 6 persons per image.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mhp/error.hpp"
#include "mhp/report.hpp"
#include "mhp/scene.hpp"

namespace mhp::oracle {

inline constexpr int kMaxSide = 64;
inline constexpr std::size_t kMaxInstances = 6;

namespace naive {

inline bool has_category(const InstanceMask& m, int c) {
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x)
      if (m.at(x, y) == c) return true;
  return false;
}

// IoU of {pixels of a with category c} and {pixels of b with category c}.
inline double category_iou(const InstanceMask& a, const InstanceMask& b, int c) {
  long both = 0, either = 0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      const bool in_a = a.at(x, y) == c;
      const bool in_b = b.at(x, y) == c;
      if (in_a && in_b) ++both;
      if (in_a || in_b) ++either;
    }
  }
  if (either == 0) return 1.0;
  return static_cast<double>(both) / static_cast<double>(either);
}

inline double part_iou(const InstanceMask& pred, const InstanceMask& gt) {
  double sum = 0.0;
  int n = 0;
  for (int c = 1; c < 256; ++c) {
    if (!has_category(pred, c) && !has_category(gt, c)) continue;
    sum += category_iou(pred, gt, c);
    ++n;
  }
  return n == 0 ? 0.0 : sum / n;
}

inline double region_iou(const InstanceMask& pred, const InstanceMask& gt) {
  long both = 0, either = 0;
  for (int y = 0; y < pred.height(); ++y) {
    for (int x = 0; x < pred.width(); ++x) {
      const bool a = pred.at(x, y) != 0;
      const bool b = gt.at(x, y) != 0;
      if (a && b) ++both;
      if (a || b) ++either;
    }
  }
  if (either == 0) return 1.0;
  return static_cast<double>(both) / static_cast<double>(either);
}

inline double instance_pcp(const InstanceMask& pred, const InstanceMask& gt, double t) {
  int total = 0, correct = 0;
  for (int c = 1; c < 256; ++c) {
    if (!has_category(gt, c)) continue;
    ++total;
    if (category_iou(pred, gt, c) > t) ++correct;
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) / total;
}

struct Match {
  int pred;
  int gt;
};

// Repeatedly pick the highest-scored unvisited prediction (lowest index on
// ties) and give it the best still-free ground truth if that beats t.
inline std::vector<Match> greedy(const ScoredScene& preds, const SceneAnnotation& gts,
                                 bool part, double t) {
  const int np = static_cast<int>(preds.scene.instances.size());
  const int ng = static_cast<int>(gts.instances.size());
  std::vector<bool> visited(np, false), taken(ng, false);
  std::vector<Match> matches;
  for (int step = 0; step < np; ++step) {
    int p = -1;
    for (int i = 0; i < np; ++i) {
      if (visited[i]) continue;
      if (p < 0 || preds.scores[i] > preds.scores[p]) p = i;
    }
    visited[p] = true;
    int best = -1;
    double best_iou = 0.0;
    for (int g = 0; g < ng; ++g) {
      if (taken[g]) continue;
      const double v = part ? naive::part_iou(preds.scene.instances[p], gts.instances[g])
                            : naive::region_iou(preds.scene.instances[p], gts.instances[g]);
      if (best < 0 || v > best_iou) {
        best = g;
        best_iou = v;
      }
    }
    if (best >= 0 && best_iou > t) {
      taken[best] = true;
      matches.push_back({p, best});
    }
  }
  return matches;
}

struct Row {
  double score;
  std::string image;
  int index;
  bool tp;
};

inline bool before(const Row& a, const Row& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.image != b.image) return a.image < b.image;
  return a.index < b.index;
}

// Interpolated precision at each row = best precision at any row with equal
// or higher recall; AP sums it over the recall increments.
inline double ap_from_table(std::vector<Row> rows, long total_gt) {
  if (total_gt == 0) return rows.empty() ? 1.0 : 0.0;
  // Insertion sort keeps this independent of <algorithm> orderings.
  for (std::size_t i = 1; i < rows.size(); ++i) {
    for (std::size_t j = i; j > 0 && before(rows[j], rows[j - 1]); --j) {
      std::swap(rows[j], rows[j - 1]);
    }
  }
  std::vector<long> tp_at(rows.size());
  std::vector<double> precision(rows.size());
  long tp = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].tp) ++tp;
    tp_at[i] = tp;
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }
  double weighted = 0.0;  // sum of (recall step * total_gt) * interpolated precision
  long prev_tp = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double interp = 0.0;
    for (std::size_t j = 0; j < rows.size(); ++j) {
      if (tp_at[j] >= tp_at[i] && precision[j] > interp) interp = precision[j];
    }
    weighted += static_cast<double>(tp_at[i] - prev_tp) * interp;
    prev_tp = tp_at[i];
  }
  return weighted / static_cast<double>(total_gt);
}

}  // namespace naive

inline const ScoredScene* find_prediction(const std::vector<ScoredScene>& preds,
                                          const std::string& id) {
  const ScoredScene* found = nullptr;
  for (const auto& p : preds) {
    if (p.scene.image_id != id) continue;
    if (found) throw DomainError("dataset misalignment: duplicate prediction id '" + id + "'");
    found = &p;
  }
  return found;
}

// Same contract as mhp::evaluate for ap_p, ap_p_vol, pcp and ap_r (no
// traces); refuses inputs beyond the tractability bound.
inline MetricReport evaluate(const std::vector<ScoredScene>& preds,
                             const std::vector<SceneAnnotation>& gts,
                             const std::vector<double>& thresholds) {
  if (preds.size() != gts.size()) throw DomainError("dataset misalignment");
  for (const auto& g : gts) {
    if (g.size.width > kMaxSide || g.size.height > kMaxSide || g.instances.size() > kMaxInstances) {
      throw DomainError("oracle: '" + g.image_id + "' exceeds the 64x64 / 6-person bound");
    }
    const ScoredScene* p = find_prediction(preds, g.image_id);
    if (!p) throw DomainError("dataset misalignment: no prediction for '" + g.image_id + "'");
    if (p->scene.instances.size() > kMaxInstances) {
      throw DomainError("oracle: prediction for '" + g.image_id + "' exceeds 6 persons");
    }
    for (const auto& m : p->scene.instances) {
      if (m.size() != g.size) throw DomainError("oracle: size mismatch in '" + g.image_id + "'");
    }
  }

  MetricReport report;
  long total_gt = 0;
  for (const auto& g : gts) total_gt += static_cast<long>(g.instances.size());

  auto ap_at = [&](bool part, double t) {
    std::vector<naive::Row> rows;
    for (const auto& g : gts) {
      const ScoredScene& p = *find_prediction(preds, g.image_id);
      const auto matches = naive::greedy(p, g, part, t);
      for (int i = 0; i < static_cast<int>(p.scene.instances.size()); ++i) {
        bool tp = false;
        for (const auto& m : matches) tp = tp || m.pred == i;
        rows.push_back({p.scores[static_cast<std::size_t>(i)], g.image_id, i, tp});
      }
    }
    return naive::ap_from_table(rows, total_gt);
  };

  double vol = 0.0;
  for (double t : thresholds) {
    report.ap_p[t] = ap_at(true, t);
    report.ap_r[t] = ap_at(false, t);
    vol += report.ap_p[t];

    double pcp_sum = 0.0;
    for (const auto& g : gts) {
      const ScoredScene& p = *find_prediction(preds, g.image_id);
      for (const auto& m : naive::greedy(p, g, true, t)) {
        pcp_sum += naive::instance_pcp(p.scene.instances[static_cast<std::size_t>(m.pred)],
                                       g.instances[static_cast<std::size_t>(m.gt)], t);
      }
    }
    report.pcp[t] = total_gt == 0 ? 0.0 : pcp_sum / static_cast<double>(total_gt);
  }
  if (is_standard_schedule(thresholds)) {
    report.ap_p_vol = vol / 9.0;
    double rvol = 0.0;
    for (const auto& [t, v] : report.ap_r) rvol += v;
    report.ap_r_vol = rvol / 9.0;
  }
  return report;
}

}  // namespace mhp::oracle
