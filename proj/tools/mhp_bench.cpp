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

// mhp_bench: command-line front end.
//
//   evaluate          score a prediction directory against ground truth
//   cluster           group semantic maps into persons from location maps
//   encode-locations  write location maps and counts for a ground-truth set
//   stats             dataset statistics
//   subset            top-P% interaction-intensity image ids
//   synth             generate a synthetic ground-truth set
//   corrupt           derive predictions from ground truth
//
// Exit status: 0 ok, 1 validation failure, 2 I/O failure, 64 usage error.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mhp/clustering.hpp"
#include "mhp/dataset_io.hpp"
#include "mhp/metrics.hpp"
#include "mhp/parallel.hpp"
#include "mhp/scene.hpp"
#include "mhp/synth.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;
constexpr int kExitUsage = 64;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double to_double(const std::string& s, const std::string& what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw UsageError("invalid number '" + s + "' for " + what);
  }
  return v;
}

// "A:B:STEP", inclusive of B; values snapped to 1e-6 so 0.1:0.9:0.1 gives
// exactly the doubles nearest k/10.
std::vector<double> parse_thresholds(const std::string& spec) {
  const auto first = spec.find(':');
  const auto second = first == std::string::npos ? first : spec.find(':', first + 1);
  if (second == std::string::npos) {
    // A single value.
    return {to_double(spec, "--thresholds")};
  }
  const double a = to_double(spec.substr(0, first), "--thresholds");
  const double b = to_double(spec.substr(first + 1, second - first - 1), "--thresholds");
  const double step = to_double(spec.substr(second + 1), "--thresholds");
  if (!(step > 0.0) || b < a) throw UsageError("--thresholds needs A <= B and STEP > 0");
  const auto count = static_cast<long>(std::floor((b - a) / step + 1e-9)) + 1;
  std::vector<double> out;
  for (long i = 0; i < count; ++i) {
    out.push_back(std::round((a + static_cast<double>(i) * step) * 1e6) / 1e6);
  }
  return out;
}

mhp::ImageSize parse_grid(const std::string& s) {
  static const std::regex re(R"(^([0-9]+)x([0-9]+)$)");
  std::smatch m;
  if (!std::regex_match(s, m, re)) throw UsageError("--grid must look like WxH");
  return {std::stoi(m[1].str()), std::stoi(m[2].str())};
}

mhp::IntRange parse_range(const std::string& s, const std::string& what) {
  static const std::regex re(R"(^([0-9]+)(?:(?::|\.\.)([0-9]+))?$)");
  std::smatch m;
  if (!std::regex_match(s, m, re)) throw UsageError(what + " must look like LO:HI");
  const int lo = std::stoi(m[1].str());
  const int hi = m[2].matched ? std::stoi(m[2].str()) : lo;
  return {lo, hi};
}

mhp::EncodingMode parse_encoding(const std::string& s) {
  if (s == "instance") return mhp::EncodingMode::kInstance;
  if (s == "image") return mhp::EncodingMode::kImage;
  throw UsageError("--encoding must be instance or image");
}

mhp::LabelSpec load_labels(const std::string& path) {
  return path.empty() ? mhp::LabelSpec::mhp_v2() : mhp::LabelSpec::load(path);
}

std::vector<mhp::SceneAnnotation> load_all(const mhp::DatasetHandle& handle,
                                           const std::vector<std::string>& ids,
                                           unsigned jobs) {
  std::vector<mhp::SceneAnnotation> out(ids.size());
  mhp::parallel_for(ids.size(), jobs, [&](std::size_t i) { out[i] = mhp::load_scene(handle, ids[i]); });
  return out;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
  std::string gt, pred, metrics = "ap_p,pcp,ap_r", thresholds = "0.1:0.9:0.1";
  std::string subset, label, out, format, labels, part_categories = "union";
  unsigned jobs = 1;
  bool no_traces = false;
};

int run_evaluate(const EvaluateArgs& a) {
  mhp::EvalOptions opt;
  opt.thresholds = parse_thresholds(a.thresholds);
  opt.jobs = a.jobs;
  opt.traces = !a.no_traces;
  opt.ap_p = opt.pcp = opt.ap_r = false;
  std::stringstream ms(a.metrics);
  for (std::string m; std::getline(ms, m, ',');) {
    if (m == "ap_p") opt.ap_p = true;
    else if (m == "pcp") opt.pcp = true;
    else if (m == "ap_r") opt.ap_r = true;
    else throw UsageError("unknown metric '" + m + "'");
  }
  if (a.part_categories == "union") opt.part_set = mhp::PartCategorySet::kUnion;
  else if (a.part_categories == "gt") opt.part_set = mhp::PartCategorySet::kGroundTruth;
  else throw UsageError("--part-categories must be union or gt");
  std::string format = a.format;
  if (format.empty()) format = fs::path(a.out).extension() == ".csv" ? "csv" : "json";
  if (format != "json" && format != "csv") throw UsageError("--format must be json or csv");

  const mhp::LabelSpec labels = load_labels(a.labels);
  const auto handle = mhp::DatasetHandle::open(a.gt, mhp::Split::kAll, labels);
  std::vector<std::string> ids = handle.image_ids();
  opt.subset = "all";
  if (!a.subset.empty()) {
    const auto wanted = mhp::read_id_list(a.subset);
    for (const auto& id : wanted) {
      if (!handle.contains(id)) throw mhp::DomainError("subset id '" + id + "' not in ground truth");
    }
    const std::set<std::string> unique(wanted.begin(), wanted.end());
    ids.assign(unique.begin(), unique.end());
    opt.subset = fs::path(a.subset).stem().string();
  }
  if (!a.label.empty()) opt.subset = a.label;

  const auto gts = load_all(handle, ids, a.jobs);
  std::map<std::string, mhp::ImageSize> sizes;
  for (const auto& g : gts) sizes[g.image_id] = g.size;
  const auto preds = mhp::load_prediction_set(a.pred, ids, labels, sizes);
  const mhp::MetricReport report = mhp::evaluate(preds, gts, opt);
  mhp::write_text_file(a.out, mhp::write_report(report, format == "csv" ? mhp::ReportFormat::kCsv
                                                                        : mhp::ReportFormat::kJson));
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct ClusterArgs {
  std::string semantic, locations, counts, encoding = "instance", out;
  std::uint64_t seed = 0;
  std::size_t sample_cap = 2048, max_instances = 26;
  double score = 1.0;
  unsigned jobs = 1;
};

// Semantic maps are {id}.png; a directory holding only per-person masks is
// flattened instead.
std::map<std::string, fs::path> find_semantic_maps(const fs::path& dir) {
  std::map<std::string, fs::path> out;
  std::error_code ec;
  for (const auto& e : fs::directory_iterator(dir, ec)) {
    const std::string name = e.path().filename().string();
    if (e.path().extension() != ".png" || !e.is_regular_file()) continue;
    if (std::regex_match(name, mhp::detail::mask_name_pattern())) continue;
    out[e.path().stem().string()] = e.path();
  }
  if (ec) throw mhp::IoError("cannot read directory " + dir.string());
  return out;
}

int run_cluster(const ClusterArgs& a) {
  mhp::ClusterConfig cfg;
  cfg.encoding = parse_encoding(a.encoding);
  cfg.kmeans_seed = a.seed;
  cfg.sample_cap = a.sample_cap;
  cfg.check();
  if (!fs::is_directory(a.semantic)) throw mhp::IoError("not a directory: " + a.semantic);
  const fs::path counts_dir = a.counts.empty() ? fs::path(a.locations) : fs::path(a.counts);

  std::map<std::string, fs::path> flat = find_semantic_maps(a.semantic);
  std::optional<mhp::DatasetHandle> masks;
  std::vector<std::string> ids;
  if (!flat.empty()) {
    for (const auto& [id, path] : flat) ids.push_back(id);
  } else {
    masks = mhp::DatasetHandle::open(a.semantic);
    ids = masks->image_ids();
  }
  mhp::ensure_directory(a.out);

  std::vector<nlohmann::json> diag(ids.size());
  mhp::parallel_for(ids.size(), a.jobs, [&](std::size_t i) {
    const std::string& id = ids[i];
    const mhp::SemanticMap semantic =
        masks ? mhp::flatten(mhp::load_scene(*masks, id))
              : mhp::retag<mhp::SemanticMap>(mhp::read_mask_png(flat.at(id)));
    const mhp::LocationMap loc =
        mhp::load_location_map(fs::path(a.locations) / (id + ".loc.f32"), semantic.size());
    const double raw = mhp::read_instance_count(counts_dir / (id + ".count.txt"));
    const std::size_t n = mhp::round_instance_count(raw, a.max_instances);
    mhp::ClusterDiagnostics d;
    const auto labeling = mhp::cluster_instances(semantic, loc, n, cfg, &d);
    mhp::save_predictions(mhp::labeling_to_scene(labeling, semantic, a.score, id), a.out);
    diag[i] = {{"image_id", id},     {"instance_count", n}, {"clusters", d.clusters},
               {"foreground", d.foreground}, {"sampled", d.sampled}, {"sigma", d.sigma},
               {"warnings", d.warnings}};
  });
  for (const auto& d : diag) {
    for (const auto& w : d["warnings"]) {
      std::cerr << "warning: " << d["image_id"].get<std::string>() << ": " << w.get<std::string>() << "\n";
    }
  }
  nlohmann::json run = {{"encoding", a.encoding}, {"seed", a.seed},
                        {"sample_cap", a.sample_cap}, {"images", diag}};
  mhp::write_text_file(fs::path(a.out) / "cluster_run.json", run.dump(2) + "\n");
  return kExitOk;
}

// ---------------------------------------------------------------------------

int run_encode(const std::string& gt, const std::string& encoding, const std::string& out,
               unsigned jobs) {
  const mhp::EncodingMode mode = parse_encoding(encoding);
  const auto handle = mhp::DatasetHandle::open(gt);
  mhp::ensure_directory(out);
  const auto& ids = handle.image_ids();
  mhp::parallel_for(ids.size(), jobs, [&](std::size_t i) {
    const auto scene = mhp::load_scene(handle, ids[i]);
    const fs::path base = fs::path(out) / ids[i];
    mhp::save_location_map(mhp::encode_locations(scene, mode), base.string() + ".loc.f32");
    mhp::write_instance_count(base.string() + ".count.txt",
                              static_cast<double>(scene.instances.size()));
    mhp::write_mask_png(mhp::flatten(scene), base.string() + ".png");
  });
  return kExitOk;
}

int run_stats(const std::string& gt, const std::string& labels_path, const std::string& split,
              const std::string& out) {
  const mhp::LabelSpec labels = load_labels(labels_path);
  const auto handle = mhp::DatasetHandle::open(gt, mhp::parse_split(split), labels);
  const auto scenes = mhp::load_dataset(handle);
  mhp::StatsReport stats = mhp::dataset_stats(scenes, labels);
  stats.split_sizes = handle.split_sizes();
  mhp::write_text_file(out, mhp::write_stats(stats));
  return kExitOk;
}

int run_subset(const std::string& gt, double percent, const std::string& out) {
  const auto handle = mhp::DatasetHandle::open(gt);
  const auto scenes = mhp::load_dataset(handle);
  mhp::write_id_list(out, mhp::select_subset(scenes, percent));
  return kExitOk;
}

struct SynthArgs {
  std::uint64_t seed = 0;
  std::size_t images = 10;
  std::string grid = "64x64", overlap = "disjoint", instances = "2:5", parts = "1:4";
  std::string prefix = "synth", out;
  unsigned jobs = 1;
};

int run_synth(const SynthArgs& a) {
  mhp::SynthConfig cfg;
  cfg.seed = a.seed;
  cfg.image_count = a.images;
  cfg.grid = parse_grid(a.grid);
  cfg.overlap = mhp::parse_overlap_mode(a.overlap);
  cfg.instances_per_image = parse_range(a.instances, "--instances");
  cfg.parts_per_instance = parse_range(a.parts, "--parts");
  cfg.id_prefix = a.prefix;
  const auto scenes = mhp::synth_generate(cfg, a.jobs);
  mhp::ensure_directory(a.out);
  mhp::parallel_for(scenes.size(), a.jobs, [&](std::size_t i) { mhp::save_scene(scenes[i], a.out); });
  return kExitOk;
}

int run_corrupt(const std::string& gt, const std::string& spec_path, const std::string& out,
                unsigned jobs) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(mhp::read_text_file(spec_path));
  } catch (const nlohmann::json::exception& e) {
    throw mhp::DomainError("malformed corruption spec: " + std::string(e.what()));
  }
  const mhp::CorruptionSpec spec = mhp::corruption_from_json(doc);
  const auto handle = mhp::DatasetHandle::open(gt);
  mhp::ensure_directory(out);
  const auto& ids = handle.image_ids();
  mhp::parallel_for(ids.size(), jobs, [&](std::size_t i) {
    mhp::save_predictions(mhp::corrupt(mhp::load_scene(handle, ids[i]), spec), out);
  });
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-human parsing benchmark toolkit"};
  app.require_subcommand(1);

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against ground truth");
  evaluate->add_option("--gt", ev.gt, "Ground-truth directory")->required();
  evaluate->add_option("--pred", ev.pred, "Prediction directory")->required();
  evaluate->add_option("--metrics", ev.metrics, "Comma list of ap_p,pcp,ap_r");
  evaluate->add_option("--thresholds", ev.thresholds, "A:B:STEP or a single value");
  evaluate->add_option("--subset", ev.subset, "File of image ids to restrict to");
  evaluate->add_option("--label", ev.label, "Subset label written into the report");
  evaluate->add_option("--out", ev.out, "Report file")->required();
  evaluate->add_option("--format", ev.format, "json or csv");
  evaluate->add_option("--labels", ev.labels, "Label spec file");
  evaluate->add_option("--part-categories", ev.part_categories, "union or gt");
  evaluate->add_option("--jobs", ev.jobs, "Worker threads (0 = all cores)");
  evaluate->add_flag("--no-traces", ev.no_traces, "Omit per-image matching traces");

  ClusterArgs cl;
  auto* cluster = app.add_subcommand("cluster", "Cluster foreground pixels into persons");
  cluster->add_option("--semantic", cl.semantic, "Semantic maps ({id}.png) or person masks")->required();
  cluster->add_option("--locations", cl.locations, "Directory of {id}.loc.f32")->required();
  cluster->add_option("--counts", cl.counts, "Directory of {id}.count.txt (default: --locations)");
  cluster->add_option("--encoding", cl.encoding, "instance or image (recorded in cluster_run.json)");
  cluster->add_option("--seed", cl.seed, "k-means / sampling seed");
  cluster->add_option("--sample-cap", cl.sample_cap, "Max pixels entering the eigenproblem");
  cluster->add_option("--max-instances", cl.max_instances, "Upper clamp for instance counts");
  cluster->add_option("--score", cl.score, "Confidence assigned to every cluster");
  cluster->add_option("--out", cl.out, "Prediction directory")->required();
  cluster->add_option("--jobs", cl.jobs, "Worker threads (0 = all cores)");

  std::string enc_gt, enc_mode = "instance", enc_out;
  unsigned enc_jobs = 1;
  auto* encode = app.add_subcommand("encode-locations", "Write location maps and counts");
  encode->add_option("--gt", enc_gt, "Ground-truth directory")->required();
  encode->add_option("--encoding", enc_mode, "instance or image");
  encode->add_option("--out", enc_out, "Output directory")->required();
  encode->add_option("--jobs", enc_jobs, "Worker threads (0 = all cores)");

  std::string st_gt, st_labels, st_split = "all", st_out;
  auto* stats = app.add_subcommand("stats", "Dataset statistics");
  stats->add_option("--gt", st_gt, "Ground-truth directory")->required();
  stats->add_option("--labels", st_labels, "Label spec file");
  stats->add_option("--split", st_split, "all, train, val or test");
  stats->add_option("--out", st_out, "Statistics JSON")->required();

  std::string sb_gt, sb_out;
  double sb_percent = 0.0;
  auto* subset = app.add_subcommand("subset", "Top interaction-intensity image ids");
  subset->add_option("--gt", sb_gt, "Ground-truth directory")->required();
  subset->add_option("--percent", sb_percent, "Percentage in (0, 100]")->required();
  subset->add_option("--out", sb_out, "Id list file")->required();

  SynthArgs sy;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic ground-truth set");
  synth->add_option("--seed", sy.seed, "Generator seed")->required();
  synth->add_option("--images", sy.images, "Image count")->required();
  synth->add_option("--grid", sy.grid, "WxH");
  synth->add_option("--overlap", sy.overlap, "disjoint, mild or heavy");
  synth->add_option("--instances", sy.instances, "Persons per image, LO:HI");
  synth->add_option("--parts", sy.parts, "Parts per person, LO:HI");
  synth->add_option("--prefix", sy.prefix, "Image id prefix");
  synth->add_option("--out", sy.out, "Output directory")->required();
  synth->add_option("--jobs", sy.jobs, "Worker threads (0 = all cores)");

  std::string co_gt, co_spec, co_out;
  unsigned co_jobs = 1;
  auto* corrupt = app.add_subcommand("corrupt", "Derive corrupted predictions");
  corrupt->add_option("--gt", co_gt, "Ground-truth directory")->required();
  corrupt->add_option("--spec", co_spec, "Corruption spec JSON")->required();
  corrupt->add_option("--out", co_out, "Prediction directory")->required();
  corrupt->add_option("--jobs", co_jobs, "Worker threads (0 = all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*evaluate) return run_evaluate(ev);
    if (*cluster) return run_cluster(cl);
    if (*encode) return run_encode(enc_gt, enc_mode, enc_out, enc_jobs);
    if (*stats) return run_stats(st_gt, st_labels, st_split, st_out);
    if (*subset) return run_subset(sb_gt, sb_percent, sb_out);
    if (*synth) return run_synth(sy);
    if (*corrupt) return run_corrupt(co_gt, co_spec, co_out, co_jobs);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const mhp::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const mhp::DomainError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitUsage;
}
