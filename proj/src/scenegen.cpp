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

#include "udos/scenegen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "udos/errors.hpp"

namespace udos {

namespace {

constexpr int kNumClasses = 5;

struct Rgb {
  double r, g, b;
};

constexpr std::array<Rgb, kNumClasses> kClassColor = {{
    {200.0, 60.0, 200.0},  // person
    {40.0, 70.0, 220.0},   // car
    {40.0, 180.0, 50.0},   // truck
    {220.0, 30.0, 30.0},   // stop sign
    {240.0, 210.0, 30.0},  // traffic light
}};

constexpr Rgb kHousing = {25.0, 25.0, 25.0};

std::mt19937_64 scene_rng(std::uint64_t seed, std::int64_t index) {
  const auto idx = static_cast<std::uint64_t>(index);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(idx), static_cast<std::uint32_t>(idx >> 32)};
  return std::mt19937_64(seq);
}

// Box extents for a class given the longer side.
std::pair<int, int> object_extent(int class_id, int size, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto shorter = [&](double lo, double hi) {
    return std::max(4, static_cast<int>(std::lround(size / (lo + (hi - lo) * u(rng)))));
  };
  switch (class_id) {
    case 0: return {shorter(1.7, 2.2), size};  // person: tall
    case 1: return {size, shorter(1.4, 1.7)};  // car
    case 2: return {size, shorter(2.3, 2.8)};  // truck
    case 3: return {size, size};               // stop sign
    default: return {shorter(2.6, 3.0), size};  // traffic light: tall, narrow
  }
}

bool inside_shape(int class_id, const Box& b, double px, double py) {
  const double cx = b.center_x();
  const double cy = b.center_y();
  const double hw = 0.5 * b.width();
  const double hh = 0.5 * b.height();
  const double dx = px - cx;
  const double dy = py - cy;
  switch (class_id) {
    case 0: return (dx * dx) / (hw * hw) + (dy * dy) / (hh * hh) <= 1.0;
    case 1:
    case 2: return std::abs(dx) <= hw && std::abs(dy) <= hh;
    case 3: return std::abs(dx) <= hw && std::abs(dy) <= hh && std::abs(dx) + std::abs(dy) <= hw * std::sqrt(2.0);
    default: return false;  // traffic light is painted separately
  }
}

void paint(Image& image, const Box& b, const Rgb& color, auto&& contains) {
  const int x0 = static_cast<int>(b.x1);
  const int y0 = static_cast<int>(b.y1);
  const int x1 = static_cast<int>(b.x2);
  const int y1 = static_cast<int>(b.y2);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      if (contains(x + 0.5, y + 0.5)) {
        image(y, x, 0) = color.r;
        image(y, x, 1) = color.g;
        image(y, x, 2) = color.b;
      }
    }
  }
}

void render_object(Image& image, int class_id, const Box& b, const Rgb& color, const Rgb& housing) {
  if (class_id != 4) {
    paint(image, b, color, [&](double px, double py) { return inside_shape(class_id, b, px, py); });
    return;
  }
  paint(image, b, housing, [](double, double) { return true; });
  const double radius = 0.5 * std::min(b.width(), b.height() / 3.0);
  for (int k = 0; k < 3; ++k) {
    const double cx = b.center_x();
    const double cy = b.y1 + b.height() * (2 * k + 1) / 6.0;
    paint(image, b, color, [&](double px, double py) {
      return (px - cx) * (px - cx) + (py - cy) * (py - cy) <= radius * radius;
    });
  }
}

}  // namespace

void SceneSpec::validate() const {
  if (height < 32 || width < 32) {
    throw ConfigError("SceneSpec: image size must be at least 32x32");
  }
  if (min_objects < 0 || max_objects < min_objects) {
    throw ConfigError("SceneSpec: objects_per_image must satisfy 0 <= min <= max");
  }
  if (min_object_size < 6 || max_object_size < min_object_size) {
    throw ConfigError("SceneSpec: object size range must satisfy 6 <= min <= max");
  }
  if (max_object_size > std::min(height, width)) {
    throw ConfigError("SceneSpec: objects cannot fit in the image (max_object_size exceeds image side)");
  }
  if (static_cast<long long>(min_objects) * min_object_size * min_object_size >
      static_cast<long long>(height) * width) {
    throw ConfigError("SceneSpec: objects cannot fit in the image (minimum object area exceeds image area)");
  }
  if (class_frequency.size() != static_cast<std::size_t>(kNumClasses)) {
    throw ConfigError("SceneSpec: class_frequency needs one weight per class");
  }
  double total = 0.0;
  for (double w : class_frequency) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw ConfigError("SceneSpec: class weights must be finite and non-negative");
    }
    total += w;
  }
  if (!(total > 0.0)) {
    throw ConfigError("SceneSpec: class weights must not all be zero");
  }
  if (!(contrast > 0.0 && contrast <= 1.0)) {
    throw ConfigError("SceneSpec: contrast must lie in (0, 1]");
  }
  if (!(noise_level >= 0.0) || !std::isfinite(noise_level)) {
    throw ConfigError("SceneSpec: noise_level must be finite and non-negative");
  }
}

std::vector<double> coco_class_frequency() {
  return {64115.0, 12251.0, 6127.0, 1734.0, 4139.0};
}

std::pair<Image, std::vector<GroundTruthObject>> render_scene(const SceneSpec& spec, std::int64_t index) {
  spec.validate();
  std::mt19937_64 rng = scene_rng(spec.seed, index);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  auto uniform_int = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };

  Image image(spec.height, spec.width, 3);
  const double gray = uniform(70.0, 150.0);
  const Rgb background{gray + uniform(-12.0, 12.0), gray + uniform(-12.0, 12.0), gray + uniform(-12.0, 12.0)};
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      image(y, x, 0) = background.r;
      image(y, x, 1) = background.g;
      image(y, x, 2) = background.b;
    }
  }

  auto blend = [&](const Rgb& bg, const Rgb& c) {
    const double t = spec.contrast;
    return Rgb{bg.r + t * (c.r - bg.r), bg.g + t * (c.g - bg.g), bg.b + t * (c.b - bg.b)};
  };

  std::discrete_distribution<int> pick_class(spec.class_frequency.begin(), spec.class_frequency.end());
  const int count = uniform_int(spec.min_objects, spec.max_objects);
  std::vector<GroundTruthObject> objects;
  objects.reserve(static_cast<std::size_t>(count));
  constexpr int kAttempts = 64;
  constexpr double kMaxOverlap = 0.1;
  constexpr double kMinCenterDistance = 8.0;
  for (int n = 0; n < count; ++n) {
    const int class_id = pick_class(rng);
    const int size = uniform_int(spec.min_object_size, spec.max_object_size);
    const auto [w, h] = object_extent(class_id, size, rng);
    Box box;
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
      const int x = uniform_int(0, spec.width - w);
      const int y = uniform_int(0, spec.height - h);
      box = Box{static_cast<double>(x), static_cast<double>(y), static_cast<double>(x + w),
                static_cast<double>(y + h)};
      const bool clear = std::none_of(objects.begin(), objects.end(), [&](const GroundTruthObject& o) {
        const double dx = o.box.center_x() - box.center_x();
        const double dy = o.box.center_y() - box.center_y();
        return iou(o.box, box) > kMaxOverlap || std::hypot(dx, dy) < kMinCenterDistance;
      });
      if (clear) break;  // otherwise the last candidate is kept and may overlap
    }
    const Rgb base = kClassColor[static_cast<std::size_t>(class_id)];
    const Rgb color = blend(background, {std::clamp(base.r + uniform(-20.0, 20.0), 0.0, 255.0),
                                         std::clamp(base.g + uniform(-20.0, 20.0), 0.0, 255.0),
                                         std::clamp(base.b + uniform(-20.0, 20.0), 0.0, 255.0)});
    render_object(image, class_id, box, color, blend(background, kHousing));
    objects.push_back(GroundTruthObject{class_id, box});
  }

  for (Eigen::Index i = 0; i < image.size(); ++i) {
    const double noisy = image.array()[i] + uniform(-spec.noise_level, spec.noise_level);
    image.array()[i] = std::clamp(std::round(noisy), kIntensityMin, kIntensityMax);
  }
  return {std::move(image), std::move(objects)};
}

Dataset generate_dataset(const SceneSpec& spec, std::int64_t n_images) {
  if (n_images < 1) {
    throw ConfigError("generate_dataset: n_images must be at least 1");
  }
  spec.validate();
  Dataset dataset;
  dataset.classes = default_classes();
  dataset.samples.reserve(static_cast<std::size_t>(n_images));
  for (std::int64_t i = 0; i < n_images; ++i) {
    auto [image, objects] = render_scene(spec, i);
    Sample sample;
    sample.id = i + 1;
    sample.image = std::move(image);
    sample.objects = std::move(objects);
    dataset.samples.push_back(std::move(sample));
  }
  return dataset;
}

}  // namespace udos
