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

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "mhp/error.hpp"
#include "mhp/scene.hpp"

namespace mhp {

// Per-pixel 4-vector of normalized bounding-box corners
// (x_left/w, y_top/h, x_right/w, y_bottom/h). Row-major, channels
// interleaved, float32 to match the on-disk format.
class LocationMap {
 public:
  static constexpr int kChannels = 4;
  using Vector = std::array<float, kChannels>;

  LocationMap() = default;
  explicit LocationMap(ImageSize size)
      : size_(size), data_(size.area() * kChannels, 0.0f) {}
  LocationMap(ImageSize size, std::vector<float> data)
      : size_(size), data_(std::move(data)) {
    if (data_.size() != size_.area() * kChannels) {
      throw DomainError("location map data length does not match size " +
                        to_string(size_));
    }
    for (float v : data_) {
      if (!std::isfinite(v)) throw DomainError("location map holds a non-finite value");
    }
  }

  ImageSize size() const { return size_; }
  std::size_t pixel_count() const { return size_.area(); }

  Vector vector(std::size_t pixel) const {
    const float* p = data_.data() + pixel * kChannels;
    return {p[0], p[1], p[2], p[3]};
  }
  void set(std::size_t pixel, const Vector& v) {
    float* p = data_.data() + pixel * kChannels;
    for (int c = 0; c < kChannels; ++c) p[c] = v[c];
  }

  std::span<const float> data() const { return data_; }

  friend bool operator==(const LocationMap&, const LocationMap&) = default;

 private:
  ImageSize size_{};
  std::vector<float> data_;
};

struct InstanceLabelingTag {};

// Per-pixel person id: 0 = no person, 1..K = cluster.
using InstanceLabeling = Raster<std::uint16_t, InstanceLabelingTag>;

}  // namespace mhp
