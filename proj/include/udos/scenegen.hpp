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

#include <cstdint>
#include <utility>
#include <vector>

#include "udos/dataset.hpp"

namespace udos {

/// Parameters of the synthetic scene distribution.
///
/// Every scene is a flat tinted background with uniform noise of amplitude
/// `noise_level`, overlaid with `objects_per_image` parametric shapes. The
/// five classes have distinct geometry and colour families:
///   person        upright ellipse, magenta
///   car           rectangle about 1.5:1, blue
///   truck         elongated rectangle about 2.5:1, green
///   stop sign     regular octagon, red
///   traffic light three stacked discs, yellow
/// Object colours are blended toward the background by `contrast` (1 gives
/// the saturated family colour). Object boxes are pixel-aligned. Rendering
/// is a pure function of (spec, index).
struct SceneSpec {
  int height = 64;
  int width = 64;
  int min_objects = 2;
  int max_objects = 4;
  int min_object_size = 14;  // longer box side, pixels
  int max_object_size = 26;
  std::vector<double> class_frequency = {1.0, 1.0, 1.0, 1.0, 1.0};
  double noise_level = 3.0;
  double contrast = 0.2;
  std::uint64_t seed = 0;

  void validate() const;  // throws ConfigError
};

/// COCO train image counts for person, car, truck, stop sign, traffic light.
std::vector<double> coco_class_frequency();

std::pair<Image, std::vector<GroundTruthObject>> render_scene(const SceneSpec& spec, std::int64_t index);

/// Samples 0..n_images-1 with ids 1..n_images and default_classes().
Dataset generate_dataset(const SceneSpec& spec, std::int64_t n_images);

}  // namespace udos
