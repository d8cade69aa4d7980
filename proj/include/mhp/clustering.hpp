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

// Instance-aware clustering: encode per-pixel bounding-box location
// vectors from ground truth, and group the foreground of a semantic map
// into person instances given a location map and an instance count.
//
// Grouping is normalized spectral clustering:
//   A_ij = exp(-|v_i - v_j|^2 / (2 sigma^2)), A_ii = 0
//   L    = D^-1/2 A D^-1/2
//   rows of the top-n eigenvectors of L, unit-normalized, then k-means.
// Consumers link Eigen3::Eigen.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "mhp/error.hpp"
#include "mhp/location.hpp"
#include "mhp/random.hpp"
#include "mhp/scene.hpp"

namespace mhp {

enum class EncodingMode {
  kInstance,  // corners divided by the person's own box width/height
  kImage,     // corners divided by the image width/height
};

enum class SigmaRule { kMedianDistance, kFixed };

struct ClusterConfig {
  EncodingMode encoding = EncodingMode::kInstance;
  std::size_t sample_cap = 2048;
  SigmaRule sigma_rule = SigmaRule::kMedianDistance;
  double sigma = 0.0;  // used with SigmaRule::kFixed
  std::size_t sigma_sample_cap = 1024;
  std::uint64_t kmeans_seed = 0;
  int kmeans_max_iter = 100;
  double kmeans_tol = 1e-6;

  void check() const {
    if (sample_cap < 1) throw DomainError("cluster config: sample_cap must be >= 1");
    if (sigma_sample_cap < 2) throw DomainError("cluster config: sigma_sample_cap must be >= 2");
    if (kmeans_max_iter < 1) throw DomainError("cluster config: kmeans_max_iter must be >= 1");
    if (!(kmeans_tol > 0.0)) throw DomainError("cluster config: kmeans_tol must be > 0");
    if (sigma_rule == SigmaRule::kFixed && !(sigma > 0.0 && std::isfinite(sigma))) {
      throw DomainError("cluster config: fixed sigma must be positive");
    }
  }
};

struct ClusterDiagnostics {
  std::size_t foreground = 0;
  std::size_t sampled = 0;
  double sigma = 0.0;
  std::size_t clusters = 0;
  bool eigen_converged = true;
  std::vector<std::string> warnings;
};

// ---------------------------------------------------------------------------
// Location encoding

inline LocationMap encode_locations(const SceneAnnotation& scene, EncodingMode mode) {
  if (!scene.size.valid()) throw DomainError("invalid image size " + to_string(scene.size));
  LocationMap out(scene.size);
  if (scene.instances.empty()) return out;
  // Later instances own overlapping pixels, as in flatten().
  std::vector<int> owner(scene.size.area(), -1);
  for (std::size_t i = 0; i < scene.instances.size(); ++i) {
    const InstanceMask& mask = scene.instances[i];
    if (mask.size() != scene.size) throw DomainError("size mismatch in '" + scene.image_id + "'");
    for (std::size_t p = 0; p < mask.pixel_count(); ++p) {
      if (mask[p] != kBackground) owner[p] = static_cast<int>(i);
    }
  }
  std::vector<LocationMap::Vector> vectors;
  for (const auto& mask : scene.instances) {
    const BoundingBox b = bounding_box(mask);
    const double w = mode == EncodingMode::kInstance ? b.width() : scene.size.width;
    const double h = mode == EncodingMode::kInstance ? b.height() : scene.size.height;
    vectors.push_back({static_cast<float>(b.x_left / w), static_cast<float>(b.y_top / h),
                       static_cast<float>(b.x_right / w), static_cast<float>(b.y_bottom / h)});
  }
  for (std::size_t p = 0; p < owner.size(); ++p) {
    if (owner[p] >= 0) out.set(p, vectors[static_cast<std::size_t>(owner[p])]);
  }
  return out;
}

// Nearest integer (halves away from zero), clamped to [1, max_n].
inline std::size_t round_instance_count(double raw, std::size_t max_n) {
  if (!std::isfinite(raw)) throw DomainError("instance count is not finite");
  if (max_n < 1) throw DomainError("max instance count must be >= 1");
  const double r = std::round(raw);
  if (r < 1.0) return 1;
  if (r > static_cast<double>(max_n)) return max_n;
  return static_cast<std::size_t>(r);
}

// ---------------------------------------------------------------------------
// Spectral machinery

namespace detail {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline double squared_distance(const Matrix& points, Eigen::Index i, Eigen::Index j) {
  return (points.row(i) - points.row(j)).squaredNorm();
}

// Median of the positive pairwise distances among (at most `cap`) evenly
// strided points. Coincident pairs are excluded so that large point masses
// do not drive the median to zero. Returns 0 iff all points coincide.
inline double median_pairwise_distance(const Matrix& points, std::size_t cap) {
  const auto n = static_cast<std::size_t>(points.rows());
  auto collect = [&](const std::vector<Eigen::Index>& idx) {
    std::vector<double> d;
    for (std::size_t a = 0; a < idx.size(); ++a) {
      for (std::size_t b = a + 1; b < idx.size(); ++b) {
        const double v = squared_distance(points, idx[a], idx[b]);
        if (v > 0.0) d.push_back(v);
      }
    }
    return d;
  };
  std::vector<Eigen::Index> idx;
  const std::size_t m = std::min(n, cap);
  for (std::size_t i = 0; i < m; ++i) {
    idx.push_back(static_cast<Eigen::Index>(i * n / m));
  }
  std::vector<double> d = collect(idx);
  if (d.empty() && m < n) {
    // The strided subset may have missed the only distinct points.
    for (Eigen::Index i = 1; i < static_cast<Eigen::Index>(n); ++i) {
      const double v = squared_distance(points, 0, i);
      if (v > 0.0) d.push_back(v);
    }
  }
  if (d.empty()) return 0.0;
  const std::size_t mid = d.size() / 2;
  std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid), d.end());
  double med = std::sqrt(d[mid]);
  if (d.size() % 2 == 0) {
    const double lower = *std::max_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid));
    med = 0.5 * (med + std::sqrt(lower));
  }
  return med;
}

// Symmetric normalized affinity D^-1/2 A D^-1/2. Rows with zero degree
// stay zero. `shift` receives max_i 1/d_i over non-zero degrees.
inline Matrix normalized_affinity(const Matrix& points, double sigma, double* shift) {
  const Eigen::Index n = points.rows();
  Matrix a(n, n);
  const double scale = 1.0 / (2.0 * sigma * sigma);
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = std::exp(-squared_distance(points, i, j) * scale);
      a(i, j) = v;
      a(j, i) = v;
    }
  }
  Vector inv_sqrt(n);
  double max_inv = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = a.row(i).sum();
    inv_sqrt(i) = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
    if (d > 0.0) max_inv = std::max(max_inv, 1.0 / d);
  }
  if (shift) *shift = max_inv;
  return inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal();
}

// Makes the largest-magnitude entry of each column positive (first index
// wins ties).
inline void fix_signs(Matrix& vectors) {
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
    Eigen::Index best = 0;
    for (Eigen::Index r = 1; r < vectors.rows(); ++r) {
      if (std::abs(vectors(r, c)) > std::abs(vectors(best, c))) best = r;
    }
    if (vectors(best, c) < 0.0) vectors.col(c) *= -1.0;
  }
}

inline constexpr Eigen::Index kDenseEigenLimit = 256;

// Orthonormal eigenvectors of the k largest eigenvalues of symmetric `m`,
// columns in descending eigenvalue order.
//
// Small problems use a full dense decomposition. Larger ones use block
// subspace iteration with Rayleigh-Ritz on m + shift*I, where the shift
// makes the operator positive semidefinite (for a Gaussian affinity,
// eigenvalues of L are bounded below by -max 1/d_i).
inline Matrix top_eigenvectors(const Matrix& m, Eigen::Index k, double shift,
                               std::uint64_t seed, bool* converged) {
  const Eigen::Index n = m.rows();
  if (converged) *converged = true;
  const Eigen::Index block = std::min<Eigen::Index>(n, k + 10);
  if (n <= kDenseEigenLimit || block >= n) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
    Matrix out(n, k);
    for (Eigen::Index c = 0; c < k; ++c) out.col(c) = solver.eigenvectors().col(n - 1 - c);
    return out;
  }
  Matrix op = m;
  op.diagonal().array() += shift;
  Rng rng(seed ^ 0x5bd1e995u);
  Matrix q(n, block);
  for (Eigen::Index c = 0; c < block; ++c) {
    for (Eigen::Index r = 0; r < n; ++r) q(r, c) = rng.normal();
  }
  auto orthonormalize = [&](const Matrix& z) {
    Eigen::HouseholderQR<Matrix> qr(z);
    return Matrix(qr.householderQ() * Matrix::Identity(n, block));
  };
  q = orthonormalize(q);
  constexpr int kMaxIterations = 1000;
  constexpr double kTolerance = 1e-10;
  Matrix ritz(n, block);
  for (int it = 0; it < kMaxIterations; ++it) {
    const Matrix opq = op * q;
    const Matrix h = q.transpose() * opq;
    Eigen::SelfAdjointEigenSolver<Matrix> small(0.5 * (h + h.transpose()));
    Matrix w = small.eigenvectors().rowwise().reverse();
    const Vector theta = small.eigenvalues().reverse();
    ritz = q * w;
    const Matrix op_ritz = opq * w;
    double worst = 0.0;
    for (Eigen::Index c = 0; c < k; ++c) {
      worst = std::max(worst, (op_ritz.col(c) - theta(c) * ritz.col(c)).norm());
    }
    if (worst <= kTolerance) return ritz.leftCols(k);
    q = orthonormalize(op_ritz);
  }
  if (converged) *converged = false;
  return ritz.leftCols(k);
}

// Lloyd's k-means with k-means++ seeding. Returns a cluster index per row.
inline std::vector<int> kmeans(const Matrix& points, int k, std::uint64_t seed,
                               int max_iter, double tol) {
  const Eigen::Index n = points.rows();
  const Eigen::Index dims = points.cols();
  Rng rng(seed);
  Matrix centers(k, dims);
  std::vector<double> nearest(static_cast<std::size_t>(n),
                              std::numeric_limits<double>::infinity());
  std::vector<bool> chosen(static_cast<std::size_t>(n), false);
  Eigen::Index first = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
  for (int c = 0; c < k; ++c) {
    Eigen::Index pick = first;
    if (c > 0) {
      double total = 0.0;
      for (double d : nearest) total += d;
      if (total > 0.0) {
        const double target = rng.uniform() * total;
        double acc = 0.0;
        pick = n - 1;
        for (Eigen::Index i = 0; i < n; ++i) {
          acc += nearest[static_cast<std::size_t>(i)];
          if (acc > target && nearest[static_cast<std::size_t>(i)] > 0.0) {
            pick = i;
            break;
          }
        }
      } else {
        pick = 0;
        while (pick < n - 1 && chosen[static_cast<std::size_t>(pick)]) ++pick;
      }
    }
    chosen[static_cast<std::size_t>(pick)] = true;
    centers.row(c) = points.row(pick);
    for (Eigen::Index i = 0; i < n; ++i) {
      nearest[static_cast<std::size_t>(i)] =
          std::min(nearest[static_cast<std::size_t>(i)], (points.row(i) - centers.row(c)).squaredNorm());
    }
  }

  std::vector<int> assign(static_cast<std::size_t>(n), 0);
  auto assign_all = [&] {
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = (points.row(i) - centers.row(0)).squaredNorm();
      for (int c = 1; c < k; ++c) {
        const double d = (points.row(i) - centers.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      assign[static_cast<std::size_t>(i)] = best;
    }
  };

  for (int it = 0; it < max_iter; ++it) {
    assign_all();
    Matrix next = Matrix::Zero(k, dims);
    std::vector<Eigen::Index> sizes(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = assign[static_cast<std::size_t>(i)];
      next.row(c) += points.row(i);
      ++sizes[static_cast<std::size_t>(c)];
    }
    for (int c = 0; c < k; ++c) {
      if (sizes[static_cast<std::size_t>(c)] > 0) {
        next.row(c) /= static_cast<double>(sizes[static_cast<std::size_t>(c)]);
        continue;
      }
      // Empty cluster: reseed from the point farthest from its center.
      Eigen::Index far = 0;
      double far_d = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const int own = assign[static_cast<std::size_t>(i)];
        if (sizes[static_cast<std::size_t>(own)] < 2) continue;
        const double d = (points.row(i) - centers.row(own)).squaredNorm();
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      if (far_d < 0.0) {
        next.row(c) = centers.row(c);
        continue;
      }
      --sizes[static_cast<std::size_t>(assign[static_cast<std::size_t>(far)])];
      assign[static_cast<std::size_t>(far)] = c;
      sizes[static_cast<std::size_t>(c)] = 1;
      next.row(c) = points.row(far);
    }
    double shift = 0.0;
    for (int c = 0; c < k; ++c) shift = std::max(shift, (next.row(c) - centers.row(c)).norm());
    centers = next;
    if (shift < tol) break;
  }
  assign_all();
  return assign;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Clustering

// Partitions the foreground of `semantic` into at most `n` person
// instances. Ids are 1..K by descending pixel count (ties: smallest first
// pixel index); background stays 0.
inline InstanceLabeling cluster_instances(const SemanticMap& semantic,
                                          const LocationMap& locations, std::size_t n,
                                          const ClusterConfig& cfg = {},
                                          ClusterDiagnostics* diag = nullptr) {
  cfg.check();
  if (semantic.size() != locations.size()) {
    throw DomainError("size mismatch between semantic map " + to_string(semantic.size()) +
                      " and location map " + to_string(locations.size()));
  }
  if (n < 1) throw DomainError("instance count must be >= 1");
  ClusterDiagnostics local;
  ClusterDiagnostics& d = diag ? *diag : local;
  d = ClusterDiagnostics{};

  InstanceLabeling labels(semantic.size(), 0);
  std::vector<std::size_t> fg;
  for (std::size_t p = 0; p < semantic.pixel_count(); ++p) {
    if (semantic[p] != kBackground) fg.push_back(p);
  }
  d.foreground = fg.size();
  if (fg.empty()) return labels;

  // Uniform seeded subsample, kept in raster order.
  std::vector<std::size_t> sample_pos(fg.size());
  std::iota(sample_pos.begin(), sample_pos.end(), 0);
  if (fg.size() > cfg.sample_cap) {
    Rng rng(cfg.kmeans_seed ^ 0x9e3779b97f4a7c15ULL);
    for (std::size_t i = 0; i < cfg.sample_cap; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(fg.size() - i));
      std::swap(sample_pos[i], sample_pos[j]);
    }
    sample_pos.resize(cfg.sample_cap);
    std::sort(sample_pos.begin(), sample_pos.end());
  }
  const auto s = static_cast<Eigen::Index>(sample_pos.size());
  d.sampled = sample_pos.size();

  detail::Matrix points(s, LocationMap::kChannels);
  for (Eigen::Index i = 0; i < s; ++i) {
    const auto v = locations.vector(fg[sample_pos[static_cast<std::size_t>(i)]]);
    for (int c = 0; c < LocationMap::kChannels; ++c) points(i, c) = v[static_cast<std::size_t>(c)];
  }

  std::vector<int> sample_cluster(static_cast<std::size_t>(s), 0);
  const auto k = static_cast<int>(std::min<std::size_t>(n, sample_pos.size()));
  if (k > 1) {
    double sigma = cfg.sigma;
    if (cfg.sigma_rule == SigmaRule::kMedianDistance) {
      sigma = detail::median_pairwise_distance(points, cfg.sigma_sample_cap);
    }
    d.sigma = sigma;
    if (sigma <= 0.0) {
      d.warnings.push_back("all location vectors coincide; returning a single instance");
    } else {
      double shift = 0.0;
      const detail::Matrix lap = detail::normalized_affinity(points, sigma, &shift);
      bool converged = true;
      detail::Matrix emb = detail::top_eigenvectors(lap, k, shift, cfg.kmeans_seed, &converged);
      d.eigen_converged = converged;
      if (!converged) d.warnings.push_back("eigenvector iteration did not reach tolerance");
      detail::fix_signs(emb);
      for (Eigen::Index r = 0; r < emb.rows(); ++r) {
        const double norm = emb.row(r).norm();
        if (norm > 0.0) emb.row(r) /= norm;
      }
      sample_cluster = detail::kmeans(emb, k, cfg.kmeans_seed, cfg.kmeans_max_iter, cfg.kmeans_tol);
    }
  }

  // Every foreground pixel takes a cluster: sampled ones directly, the rest
  // from the nearest sampled vector (ties: lowest cluster).
  std::vector<int> cluster_of(fg.size(), -1);
  for (std::size_t i = 0; i < sample_pos.size(); ++i) cluster_of[sample_pos[i]] = sample_cluster[i];
  if (sample_pos.size() < fg.size()) {
    std::map<LocationMap::Vector, int> memo;
    for (std::size_t i = 0; i < fg.size(); ++i) {
      if (cluster_of[i] >= 0) continue;
      const auto v = locations.vector(fg[i]);
      if (auto it = memo.find(v); it != memo.end()) {
        cluster_of[i] = it->second;
        continue;
      }
      double best_d = std::numeric_limits<double>::infinity();
      int best_c = 0;
      for (Eigen::Index j = 0; j < s; ++j) {
        double dist = 0.0;
        for (int c = 0; c < LocationMap::kChannels; ++c) {
          const double diff = static_cast<double>(v[static_cast<std::size_t>(c)]) - points(j, c);
          dist += diff * diff;
        }
        const int cj = sample_cluster[static_cast<std::size_t>(j)];
        if (dist < best_d || (dist == best_d && cj < best_c)) {
          best_d = dist;
          best_c = cj;
        }
      }
      memo.emplace(v, best_c);
      cluster_of[i] = best_c;
    }
  }

  // Renumber non-empty clusters by size, then by first pixel.
  struct Stat {
    std::size_t count = 0;
    std::size_t first = SIZE_MAX;
  };
  std::vector<Stat> stats(static_cast<std::size_t>(std::max(k, 1)));
  for (std::size_t i = 0; i < fg.size(); ++i) {
    Stat& st = stats[static_cast<std::size_t>(cluster_of[i])];
    ++st.count;
    st.first = std::min(st.first, fg[i]);
  }
  std::vector<int> order;
  for (int c = 0; c < static_cast<int>(stats.size()); ++c) {
    if (stats[static_cast<std::size_t>(c)].count) order.push_back(c);
  }
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const Stat& sa = stats[static_cast<std::size_t>(a)];
    const Stat& sb = stats[static_cast<std::size_t>(b)];
    if (sa.count != sb.count) return sa.count > sb.count;
    return sa.first < sb.first;
  });
  std::vector<std::uint16_t> new_id(stats.size(), 0);
  for (std::size_t r = 0; r < order.size(); ++r) {
    new_id[static_cast<std::size_t>(order[r])] = static_cast<std::uint16_t>(r + 1);
  }
  for (std::size_t i = 0; i < fg.size(); ++i) {
    labels[fg[i]] = new_id[static_cast<std::size_t>(cluster_of[i])];
  }
  d.clusters = order.size();
  return labels;
}

// One instance per cluster id (ascending), carrying the semantic categories
// on that cluster's pixels, all scored `default_score`.
inline ScoredScene labeling_to_scene(const InstanceLabeling& labeling,
                                     const SemanticMap& semantic, double default_score,
                                     const std::string& image_id = "") {
  if (labeling.size() != semantic.size()) {
    throw DomainError("size mismatch between labeling and semantic map");
  }
  std::uint16_t max_id = 0;
  for (auto v : labeling.pixels()) max_id = std::max(max_id, v);
  std::vector<InstanceMask> masks;
  std::vector<bool> used(static_cast<std::size_t>(max_id) + 1, false);
  for (auto v : labeling.pixels()) used[v] = true;
  std::vector<int> slot(static_cast<std::size_t>(max_id) + 1, -1);
  for (std::uint16_t id = 1; id <= max_id; ++id) {
    if (!used[id]) continue;
    slot[id] = static_cast<int>(masks.size());
    masks.emplace_back(semantic.size(), kBackground);
  }
  for (std::size_t p = 0; p < labeling.pixel_count(); ++p) {
    const auto id = labeling[p];
    if (id == 0 || semantic[p] == kBackground) continue;
    masks[static_cast<std::size_t>(slot[id])][p] = semantic[p];
  }
  // A cluster that only covers background pixels carries nothing.
  std::erase_if(masks, [](const InstanceMask& m) { return foreground_count(m) == 0; });
  SceneAnnotation scene{image_id, semantic.size(), std::move(masks)};
  return with_uniform_scores(std::move(scene), default_score);
}

}  // namespace mhp
