/* Copyright 2026 The UDOS Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

// Independent reference computations used to check the library. They are
// written for clarity, not speed, and share no code paths with the units
// they check beyond the detector's forward pass.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <optional>
#include <vector>

#include "udos/detector.hpp"
#include "udos/geometry.hpp"
#include "udos/tensor.hpp"

namespace udos::oracle {

/// Central difference of f along entry `index` of x.
inline double central_difference(const std::function<double(const Image&)>& f, const Image& x, Eigen::Index index,
                                 double h) {
  Image plus = x;
  Image minus = x;
  plus.array()[index] += h;
  minus.array()[index] -= h;
  return (f(plus) - f(minus)) / (2.0 * h);
}

inline double relative_error(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Qualifying detections per image, counted straight off detect().
inline std::vector<std::size_t> naive_counts(const DetectorWeights<double>& weights, const std::vector<Image>& images,
                                             const Image& v, double theta, std::optional<int> target_class) {
  std::vector<std::size_t> counts;
  for (const auto& image : images) {
    Image x = image;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      x.array()[i] = std::min(255.0, std::max(0.0, image.array()[i] + v.array()[i]));
    }
    std::size_t n = 0;
    for (const auto& d : detect(weights, x, theta)) {
      if (d.p_obj > theta && (!target_class || d.class_id == *target_class)) ++n;
    }
    counts.push_back(n);
  }
  return counts;
}

inline double naive_image_level(const std::vector<std::size_t>& counts) {
  const auto hit = std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; });
  return static_cast<double>(hit) / static_cast<double>(counts.size());
}

inline double naive_instance_level(const std::vector<std::size_t>& counts) {
  std::size_t total = 0;
  for (std::size_t c : counts) total += c;
  return static_cast<double>(total) / static_cast<double>(counts.size());
}

/// Greedy suppression by repeated arg-max selection over the survivors.
inline DetectionSet brute_force_nms(const DetectionSet& proposals, double iou_threshold) {
  std::vector<bool> alive(proposals.size(), true);
  DetectionSet kept;
  for (;;) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < proposals.size(); ++i) {
      if (!alive[i]) continue;
      if (!best || proposals[i].p_obj > proposals[*best].p_obj ||
          (proposals[i].p_obj == proposals[*best].p_obj && proposals[i].cell < proposals[*best].cell)) {
        best = i;
      }
    }
    if (!best) break;
    const Detection& b = proposals[*best];
    kept.push_back(b);
    alive[*best] = false;
    for (std::size_t i = 0; i < proposals.size(); ++i) {
      if (alive[i] && proposals[i].class_id == b.class_id && iou(proposals[i].box, b.box) > iou_threshold) {
        alive[i] = false;
      }
    }
  }
  return kept;
}

/// Intersection over union computed by counting covered points on a fine
/// lattice; accurate to about 1e-3 for boxes of a few pixels.
inline double lattice_iou(const Box& a, const Box& b, double step = 0.01) {
  const double x0 = std::min(a.x1, b.x1), x1 = std::max(a.x2, b.x2);
  const double y0 = std::min(a.y1, b.y1), y1 = std::max(a.y2, b.y2);
  long inter = 0, uni = 0;
  for (double y = y0 + step / 2; y < y1; y += step) {
    for (double x = x0 + step / 2; x < x1; x += step) {
      const bool in_a = x >= a.x1 && x < a.x2 && y >= a.y1 && y < a.y2;
      const bool in_b = x >= b.x1 && x < b.x2 && y >= b.y1 && y < b.y2;
      inter += in_a && in_b;
      uni += in_a || in_b;
    }
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace udos::oracle
