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

// Acceptance run: one PASS/FAIL/SKIP line per criterion, non-zero exit if
// anything failed.
//
//   1 engine/reference agreement on 200+ random suites
//   2 perfect predictions score exactly 1
//   3 AP^p non-increasing in the threshold
//   4 hand-computed AP cases
//   5 missed persons count 0 in PCP
//   6 clustering recovers disjoint persons
//   7 byte-identical CLI outputs across runs and thread counts
//   8 evaluate throughput on 512x512 scenes
//   9 real MHP v2.0 statistics (needs MHP_V2_ROOT)

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mhp/clustering.hpp"
#include "mhp/dataset_io.hpp"
#include "mhp/metrics.hpp"
#include "mhp/oracle.hpp"
#include "mhp/random.hpp"
#include "mhp/synth.hpp"

namespace fs = std::filesystem;
using namespace mhp;

namespace {

enum class Outcome { kPass, kFail, kSkip };

struct Verdict {
  Outcome outcome;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int precision = 2) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(precision);
  os << v;
  return os.str();
}

class Scratch {
 public:
  Scratch() {
    path_ = fs::temp_directory_path() / ("mhpbench_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MHP_BENCH_EXE) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = read_text_file(e.path());
  }
  return out;
}

std::vector<ScoredScene> corrupted(const std::vector<SceneAnnotation>& gts, const CorruptionSpec& spec) {
  std::vector<ScoredScene> out;
  for (const auto& g : gts) out.push_back(corrupt(g, spec));
  return out;
}

// Random suite: 1-4 images of at most 32x32 with at most 5 persons.
void random_suite(std::uint64_t seed, std::vector<SceneAnnotation>& gts,
                  std::vector<ScoredScene>& preds) {
  Rng rng(seed);
  SynthConfig cfg;
  cfg.seed = seed;
  cfg.image_count = static_cast<std::size_t>(rng.between(1, 4));
  cfg.grid = {rng.between(12, 32), rng.between(12, 32)};
  cfg.instances_per_image = {1, 5};
  cfg.parts_per_instance = {1, 4};
  cfg.overlap = static_cast<OverlapMode>(rng.below(3));
  cfg.category_pool = {1, 2, 3, 4, 5, 6};
  gts = synth_generate(cfg);
  CorruptionSpec spec;
  spec.erode_radius = rng.between(0, 1);
  spec.drop_prob = 0.3 * rng.uniform();
  spec.merge_prob = 0.3 * rng.uniform();
  spec.relabel_frac = 0.3 * rng.uniform();
  spec.score_noise = rng.bernoulli(0.2) ? 0.0 : 0.3 * rng.uniform();
  spec.category_count = 8;
  spec.seed = seed;
  preds = corrupted(gts, spec);
}

// ---------------------------------------------------------------------------

Verdict oracle_equivalence() {
  constexpr int kSuites = 200;
  const auto start = Clock::now();
  double worst = 0.0;
  std::string where;
  for (int i = 0; i < kSuites; ++i) {
    const std::uint64_t seed = 50000 + static_cast<std::uint64_t>(i);
    std::vector<SceneAnnotation> gts;
    std::vector<ScoredScene> preds;
    random_suite(seed, gts, preds);
    EvalOptions opt;
    opt.traces = false;
    const MetricReport e = evaluate(preds, gts, opt);
    const MetricReport o = oracle::evaluate(preds, gts, standard_thresholds());
    auto track = [&](double a, double b, const std::string& what) {
      const double d = std::abs(a - b);
      if (d > worst || std::isnan(d)) {
        worst = std::isnan(d) ? INFINITY : d;
        where = "seed " + std::to_string(seed) + " " + what;
      }
    };
    for (double t : standard_thresholds()) track(e.ap_p.at(t), o.ap_p.at(t), "ap_p@" + format_threshold(t));
    track(*e.ap_p_vol, *o.ap_p_vol, "ap_p_vol");
    track(e.pcp.at(0.5), o.pcp.at(0.5), "pcp@0.50");
    track(e.ap_r.at(0.5), o.ap_r.at(0.5), "ap_r@0.50");
  }
  const double secs = seconds_since(start);
  const bool ok = worst < 1e-12 && secs <= 120.0;
  std::string detail = std::to_string(kSuites) + " suites, max |diff| " + format_number(worst) +
                       ", " + fmt(secs) + " s";
  if (!where.empty() && worst >= 1e-12) detail += ", worst at " + where;
  return {ok ? Outcome::kPass : Outcome::kFail, detail};
}

Verdict perfect_identity() {
  SynthConfig cfg;
  cfg.seed = 2;
  cfg.image_count = 50;
  cfg.overlap = OverlapMode::kHeavy;
  const auto gts = synth_generate(cfg);
  std::vector<ScoredScene> preds;
  for (const auto& g : gts) preds.push_back(with_uniform_scores(g, 1.0));
  const MetricReport r = evaluate(preds, gts, EvalOptions{});
  int bad = 0;
  for (double t : standard_thresholds()) bad += r.ap_p.at(t) != 1.0;
  bad += !r.ap_p_vol || *r.ap_p_vol != 1.0;
  bad += r.pcp.at(0.5) != 1.0;
  for (double t : {0.5, 0.6, 0.7}) bad += r.ap_r.at(t) != 1.0;
  return {bad == 0 ? Outcome::kPass : Outcome::kFail,
          "50 scenes, " + std::to_string(bad) + " values differ from 1.0"};
}

Verdict monotonicity() {
  int violations = 0;
  for (int i = 0; i < 100; ++i) {
    SynthConfig cfg;
    cfg.seed = 3000 + static_cast<std::uint64_t>(i);
    cfg.image_count = 4;
    cfg.grid = {32, 32};
    cfg.overlap = static_cast<OverlapMode>(i % 3);
    const auto gts = synth_generate(cfg);
    CorruptionSpec spec;
    spec.erode_radius = i % 2;
    spec.drop_prob = 0.2;
    spec.merge_prob = 0.15;
    spec.relabel_frac = 0.05 * (i % 5);
    spec.score_noise = 0.25;
    spec.seed = static_cast<std::uint64_t>(i);
    EvalOptions opt;
    opt.traces = false;
    opt.pcp = opt.ap_r = false;
    const MetricReport r = evaluate(corrupted(gts, spec), gts, opt);
    double prev = INFINITY;
    for (const auto& [t, v] : r.ap_p) {
      violations += v > prev;
      prev = v;
    }
  }
  return {violations == 0 ? Outcome::kPass : Outcome::kFail,
          "100 suites, " + std::to_string(violations) + " violations"};
}

ScoredFlag flag(double score, bool is_tp) {
  ScoredFlag f;
  f.score = score;
  f.is_tp = is_tp;
  return f;
}

Verdict ap_cases() {
  const double a = average_precision({flag(0.9, true)}, 1).value;
  const double b = average_precision({flag(0.9, false), flag(0.8, true)}, 1).value;
  const double c = average_precision({flag(0.9, true), flag(0.8, false)}, 1).value;
  const bool ok = a == 1.0 && b == 0.5 && c == 1.0;
  return {ok ? Outcome::kPass : Outcome::kFail,
          "got " + format_number(a) + ", " + format_number(b) + ", " + format_number(c)};
}

Verdict pcp_semantics() {
  // First person: four 2x2 parts; the prediction has parts 1-2 exactly and
  // half of parts 3-4 (IoU 0.5, not above 0.5). Second person: no
  // prediction.
  const ImageSize size{10, 4};
  InstanceMask gt(size), pred(size), other(size);
  auto fill = [](InstanceMask& m, int x0, int y0, int x1, int y1, Category c) {
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) m.at(x, y) = c;
  };
  fill(gt, 0, 0, 1, 1, 1);
  fill(gt, 2, 0, 3, 1, 2);
  fill(gt, 0, 2, 1, 3, 3);
  fill(gt, 2, 2, 3, 3, 4);
  fill(pred, 0, 0, 1, 1, 1);
  fill(pred, 2, 0, 3, 1, 2);
  fill(pred, 0, 2, 1, 2, 3);
  fill(pred, 2, 2, 3, 2, 4);
  fill(other, 7, 0, 9, 3, 5);
  const std::vector<SceneAnnotation> gts{{"a", size, {gt, other}}};
  const std::vector<ScoredScene> preds{{{"a", size, {pred}}, {1.0}}};
  const MetricReport r = evaluate(preds, gts, EvalOptions{});
  const double instance = r.per_image.at(0).instance_pcp.at(0.5).at(0);
  const double overall = r.pcp.at(0.5);
  const bool ok = instance == 0.5 && overall == instance / 2.0;
  return {ok ? Outcome::kPass : Outcome::kFail,
          "instance PCP " + format_number(instance) + ", overall " + format_number(overall)};
}

Verdict clustering_recovery() {
  SynthConfig cfg;
  cfg.seed = 6;
  cfg.image_count = 100;
  cfg.grid = {64, 64};
  cfg.instances_per_image = {2, 5};
  cfg.overlap = OverlapMode::kDisjoint;
  const auto gts = synth_generate(cfg);
  const auto start = Clock::now();
  std::vector<ScoredScene> preds;
  double worst = 1.0;
  for (const auto& g : gts) {
    const SemanticMap semantic = flatten(g);
    const LocationMap loc = encode_locations(g, EncodingMode::kImage);
    const InstanceLabeling labels = cluster_instances(semantic, loc, g.instances.size());
    // Majority gt owner per cluster; a pixel agrees if its owner is the
    // majority owner of its cluster and no two clusters share an owner.
    std::map<std::pair<int, int>, std::size_t> overlap;
    std::size_t fg = 0;
    for (std::size_t p = 0; p < semantic.pixel_count(); ++p) {
      if (semantic[p] == kBackground) continue;
      ++fg;
      int owner = -1;
      for (std::size_t i = 0; i < g.instances.size(); ++i) {
        if (g.instances[i][p] != kBackground) owner = static_cast<int>(i);
      }
      ++overlap[{labels[p], owner}];
    }
    std::map<int, std::pair<std::size_t, int>> best;  // cluster -> (count, owner)
    for (const auto& [key, count] : overlap) {
      auto& b = best[key.first];
      if (count > b.first) b = {count, key.second};
    }
    std::set<int> owners;
    std::size_t agree = 0;
    for (const auto& [cluster, b] : best) {
      if (cluster != 0 && owners.insert(b.second).second) agree += b.first;
    }
    worst = std::min(worst, fg ? static_cast<double>(agree) / static_cast<double>(fg) : 1.0);
    preds.push_back(labeling_to_scene(labels, semantic, 1.0, g.image_id));
  }
  const double secs = seconds_since(start);
  const double apr = ap_r(preds, gts, 0.5).value;
  const bool ok = worst >= 0.99 && apr == 1.0 && secs <= 120.0;
  return {ok ? Outcome::kPass : Outcome::kFail,
          "100 scenes, worst pixel agreement " + fmt(100.0 * worst) + "%, ap_r@0.50 " + format_number(apr) +
              ", " + fmt(secs) + " s"};
}

Verdict determinism(const Scratch& scratch) {
  const fs::path root = scratch / "determinism";
  std::vector<std::map<std::string, std::string>> runs;
  int failures = 0;
  for (const char* jobs : {"1", "1", "0", "0"}) {
    const fs::path dir = root / ("run" + std::to_string(runs.size()));
    failures += run_cli("synth --seed 17 --images 12 --grid 48x48 --overlap mild --jobs " + std::string(jobs) +
                        " --out " + q(dir / "gt")) != 0;
    failures += run_cli("encode-locations --gt " + q(dir / "gt") + " --encoding image --jobs " + jobs +
                        " --out " + q(dir / "loc")) != 0;
    failures += run_cli("cluster --semantic " + q(dir / "loc") + " --locations " + q(dir / "loc") +
                        " --seed 5 --jobs " + jobs + " --out " + q(dir / "clustered")) != 0;
    failures += run_cli("evaluate --gt " + q(dir / "gt") + " --pred " + q(dir / "clustered") + " --jobs " +
                        jobs + " --out " + q(dir / "report.json")) != 0;
    failures += run_cli("evaluate --gt " + q(dir / "gt") + " --pred " + q(dir / "clustered") + " --jobs " +
                        jobs + " --format csv --out " + q(dir / "report.csv")) != 0;
    runs.push_back(snapshot(dir));
  }
  std::size_t differing = 0;
  for (std::size_t i = 1; i < runs.size(); ++i) differing += runs[i] != runs[0];
  const bool ok = failures == 0 && differing == 0 && !runs[0].empty();
  return {ok ? Outcome::kPass : Outcome::kFail,
          "synth/cluster/evaluate x4 (2 serial, 2 all cores), " + std::to_string(runs[0].size()) +
              " files each, " + std::to_string(differing) + " runs differ, " + std::to_string(failures) +
              " command failures"};
}

Verdict throughput(const Scratch& scratch) {
  const fs::path root = scratch / "throughput";
  SynthConfig cfg;
  cfg.seed = 8;
  cfg.image_count = 100;
  cfg.grid = {512, 512};
  cfg.instances_per_image = {2, 5};
  cfg.overlap = OverlapMode::kHeavy;
  const auto gts = synth_generate(cfg, 0);
  CorruptionSpec spec;
  spec.erode_radius = 2;
  spec.drop_prob = 0.1;
  spec.relabel_frac = 0.05;
  spec.score_noise = 0.2;
  spec.seed = 8;
  parallel_for(gts.size(), 0, [&](std::size_t i) {
    save_scene(gts[i], root / "gt");
    save_predictions(corrupt(gts[i], spec), root / "pred");
  });
  const auto start = Clock::now();
  const int rc = run_cli("evaluate --gt " + q(root / "gt") + " --pred " + q(root / "pred") +
                         " --jobs 1 --out " + q(root / "report.json"));
  const double secs = seconds_since(start);
  const bool ok = rc == 0 && secs <= 60.0;
  return {ok ? Outcome::kPass : Outcome::kFail,
          "100 scenes of 512x512, 9 thresholds, single thread: " + fmt(secs) + " s (exit " + std::to_string(rc) + ")"};
}

Verdict real_statistics() {
  const char* root = std::getenv("MHP_V2_ROOT");
  if (!root || !*root) return {Outcome::kSkip, "MHP_V2_ROOT not set"};
  const auto handle = DatasetHandle::open(root);
  const auto scenes = load_dataset(handle);
  const StatsReport s = dataset_stats(scenes, LabelSpec::mhp_v2());
  std::string detail = std::to_string(s.image_count) + " images, persons " + std::to_string(s.min_instances) +
                       "-" + std::to_string(s.max_instances) + ", mean " + fmt(s.mean_instances_per_image, 3);
  bool ok = s.image_count == 25403 && s.min_instances == 2 && s.max_instances == 26 &&
            std::abs(s.mean_instances_per_image - 3.0) <= 0.2;
  const auto& splits = handle.split_sizes();
  if (!splits.empty()) {
    auto size_of = [&](const char* k) { return splits.count(k) ? splits.at(k) : 0; };
    detail += ", splits " + std::to_string(size_of("train")) + "/" + std::to_string(size_of("val")) + "/" +
              std::to_string(size_of("test"));
    ok = ok && size_of("train") == 15403 && size_of("val") == 5000 && size_of("test") == 5000;
  }
  return {ok ? Outcome::kPass : Outcome::kFail, detail};
}

}  // namespace

int main() {
  Scratch scratch;
  struct Criterion {
    int id;
    const char* name;
    std::function<Verdict()> check;
  };
  const std::vector<Criterion> criteria{
      {1, "oracle equivalence", oracle_equivalence},
      {2, "perfect-prediction identity", perfect_identity},
      {3, "threshold monotonicity", monotonicity},
      {4, "hand-computed AP cases", ap_cases},
      {5, "PCP of missed persons", pcp_semantics},
      {6, "clustering recovery", clustering_recovery},
      {7, "determinism", [&] { return determinism(scratch); }},
      {8, "throughput", [&] { return throughput(scratch); }},
      {9, "real-data statistics", real_statistics},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = {Outcome::kFail, std::string("exception: ") + e.what()};
    }
    const char* tag = v.outcome == Outcome::kPass ? "PASS" : v.outcome == Outcome::kFail ? "FAIL" : "SKIP";
    failed += v.outcome == Outcome::kFail;
    std::cout << tag << " criterion " << c.id << " (" << c.name << "): " << v.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
