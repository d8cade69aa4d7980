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

// Plain result records shared by the metric engine, the reference
// evaluator and the serializers. No metric logic lives here.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mhp/scene.hpp"

namespace mhp {

struct MatchPair {
  std::size_t pred_index = 0;
  std::size_t gt_index = 0;
  double iou = 0.0;
  friend bool operator==(const MatchPair&, const MatchPair&) = default;
};

struct ImageTrace {
  std::string image_id;
  std::size_t gt_count = 0;
  std::size_t pred_count = 0;
  std::map<double, std::vector<MatchPair>> ap_p_matches;
  std::map<double, std::vector<MatchPair>> ap_r_matches;
  // PCP of each ground-truth instance, by threshold.
  std::map<double, std::vector<double>> instance_pcp;
};

struct MetricReport {
  std::string subset = "all";
  std::map<double, double> ap_p;
  std::map<double, double> pcp;
  std::map<double, double> ap_r;
  std::optional<double> ap_p_vol;
  std::optional<double> ap_r_vol;
  std::vector<ImageTrace> per_image;
};

// 0.1, 0.2, ..., 0.9 as the doubles nearest k/10.
inline std::vector<double> standard_thresholds() {
  std::vector<double> out;
  for (int k = 1; k <= 9; ++k) out.push_back(k / 10.0);
  return out;
}

inline bool is_standard_schedule(const std::vector<double>& thresholds) {
  const auto standard = standard_thresholds();
  if (thresholds.size() != standard.size()) return false;
  for (std::size_t i = 0; i < standard.size(); ++i) {
    if (std::abs(thresholds[i] - standard[i]) > 1e-9) return false;
  }
  return true;
}

struct StatsReport {
  std::size_t image_count = 0;
  std::size_t instance_count = 0;
  // Present when the dataset root is laid out as train/val/test.
  std::map<std::string, std::size_t> split_sizes;
  std::vector<std::string> category_names;
  // Number of instances holding at least one pixel of the category.
  std::vector<std::uint64_t> category_occurrences;
  std::vector<std::uint64_t> category_pixels;
  double mean_categories_per_image = 0.0;
  double mean_instances_per_image = 0.0;
  std::size_t min_instances = 0;
  std::size_t max_instances = 0;
  std::map<std::size_t, std::size_t> instance_histogram;
  ImageSize min_resolution{};
  ImageSize max_resolution{};
  double mean_width = 0.0;
  double mean_height = 0.0;
};

}  // namespace mhp
