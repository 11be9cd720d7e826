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
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "udos/geometry.hpp"

namespace udos {

struct AnnotatedImage {
  std::int64_t id = 0;
  std::string file_name;
  int width = 0;
  int height = 0;
};

struct Annotation {
  std::int64_t id = 0;
  std::int64_t image_id = 0;
  std::int64_t category_id = 0;
  Box box;  // converted from COCO [x, y, w, h]
};

struct Category {
  std::int64_t id = 0;
  std::string name;
};

/// COCO-shaped annotation file contents with verified referential integrity.
struct AnnotationSet {
  std::vector<AnnotatedImage> images;
  std::vector<Annotation> annotations;
  std::vector<Category> categories;
  std::map<std::string, std::int64_t, std::less<>> category_by_name;
  std::map<std::int64_t, std::size_t> image_index;  // image id -> position in images

  bool has_image(std::int64_t id) const { return image_index.count(id) != 0; }
  std::int64_t category_id(std::string_view name) const;  // throws DataError
  std::string category_name(std::int64_t id) const;       // throws DataError
};

/// Parses a COCO-style JSON document. Segmentation polygons are discarded
/// while parsing so full COCO train files stay cheap to load. Schema
/// violations and dangling image/category references raise DataError with
/// the offending location.
AnnotationSet parse_annotations(std::string_view json_text, const std::string& origin = "<memory>");
AnnotationSet load_annotations(const std::filesystem::path& path);

/// For each named category, the number of distinct images holding at least
/// one annotation of it. Unknown names raise DataError.
std::vector<std::pair<std::string, std::size_t>> count_category_images(
    const AnnotationSet& annotations, const std::vector<std::string>& categories);

/// Category names listed alongside the experiment classes in the COCO
/// vehicle-scene statistics (person, bicycle, car, truck, bus, motorcycle,
/// traffic light, stop sign).
std::vector<std::string> vehicle_scene_categories();

}  // namespace udos
