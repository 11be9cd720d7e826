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
#include <vector>

#include "udos/coco.hpp"
#include "udos/metrics.hpp"

namespace udos {

struct ExternalDetection {
  Box box;
  std::int64_t category_id = 0;
  double score = 0.0;  // top-class probability
};

/// Detections produced outside this library, keyed by image id.
///
/// File format: either a COCO results array
///   [{"image_id", "category_id", "bbox": [x, y, w, h], "score"}, ...]
/// whose coverage is every image of the annotation set, or an object
///   {"image_ids": [...], "detections": [ ...same entries... ]}
/// with explicit coverage. An entry may give "class_scores"
/// ({"<category id>": p, ...}) instead of "category_id"/"score"; the argmax
/// category (lowest id on ties) and its probability are used.
struct ExternalDetectionDump {
  std::vector<std::int64_t> image_ids;  // sorted coverage
  std::map<std::int64_t, std::vector<ExternalDetection>> detections;

  const std::vector<ExternalDetection>& for_image(std::int64_t id) const;
};

ExternalDetectionDump parse_detection_dump(std::string_view json_text, const AnnotationSet& annotations,
                                           const std::string& origin = "<memory>");
ExternalDetectionDump load_detection_dump(const std::filesystem::path& path, const AnnotationSet& annotations);

struct ExternalEvaluation {
  BlindDegreeReport clean;
  BlindDegreeReport attacked;
  std::vector<std::int64_t> curated_ids;
};

/// Curates on `clean_dump` (images with a target detection scoring above
/// theta) and measures both blind degrees of `dump` on that subset. Dumps
/// covering different image ids raise DataError.
ExternalEvaluation evaluate_external(const AnnotationSet& annotations, const ExternalDetectionDump& dump,
                                     const ExternalDetectionDump& clean_dump, std::string_view target_category,
                                     double theta);

}  // namespace udos
