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

#include "udos/external.hpp"

#include <algorithm>
#include <charconv>

#include <json.hpp>

#include "udos/errors.hpp"
#include "udos/io.hpp"

namespace udos {

using nlohmann::json;

const std::vector<ExternalDetection>& ExternalDetectionDump::for_image(std::int64_t id) const {
  static const std::vector<ExternalDetection> kNone;
  auto it = detections.find(id);
  return it == detections.end() ? kNone : it->second;
}

namespace {

ExternalDetection parse_entry(const json& obj, const AnnotationSet& annotations, const std::string& loc) {
  if (!obj.is_object()) throw DataError(loc + ": expected object");
  ExternalDetection d;
  auto bbox = obj.find("bbox");
  if (bbox == obj.end() || !bbox->is_array() || bbox->size() != 4 ||
      !std::all_of(bbox->begin(), bbox->end(), [](const json& v) { return v.is_number(); })) {
    throw DataError(loc + ": 'bbox' must be [x, y, w, h]");
  }
  const double x = (*bbox)[0].get<double>();
  const double y = (*bbox)[1].get<double>();
  d.box = Box{x, y, x + (*bbox)[2].get<double>(), y + (*bbox)[3].get<double>()};

  if (auto scores = obj.find("class_scores"); scores != obj.end()) {
    if (!scores->is_object() || scores->empty()) {
      throw DataError(loc + ": 'class_scores' must be a non-empty object");
    }
    bool first = true;
    for (auto it = scores->begin(); it != scores->end(); ++it) {
      std::int64_t cat = 0;
      const std::string& key = it.key();
      auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), cat);
      if (ec != std::errc() || ptr != key.data() + key.size() || !it->is_number()) {
        throw DataError(loc + ": bad class_scores entry '" + key + "'");
      }
      const double p = it->get<double>();
      if (first || p > d.score || (p == d.score && cat < d.category_id)) {
        d.score = p;
        d.category_id = cat;
        first = false;
      }
    }
  } else {
    auto cat = obj.find("category_id");
    auto score = obj.find("score");
    if (cat == obj.end() || !cat->is_number_integer() || score == obj.end() || !score->is_number()) {
      throw DataError(loc + ": needs integer 'category_id' and numeric 'score' (or 'class_scores')");
    }
    d.category_id = cat->get<std::int64_t>();
    d.score = score->get<double>();
  }
  if (!(d.score >= 0.0 && d.score <= 1.0)) {
    throw DataError(loc + ": score outside [0, 1]");
  }
  bool known = false;
  for (const auto& c : annotations.categories) known = known || c.id == d.category_id;
  if (!known) {
    throw DataError(loc + ": category_id " + std::to_string(d.category_id) + " does not exist");
  }
  return d;
}

}  // namespace

ExternalDetectionDump parse_detection_dump(std::string_view json_text, const AnnotationSet& annotations,
                                           const std::string& origin) {
  json doc;
  try {
    doc = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    throw DataError(origin + ": invalid JSON: " + e.what());
  }
  ExternalDetectionDump dump;
  const json* entries = nullptr;
  if (doc.is_array()) {
    for (const auto& img : annotations.images) dump.image_ids.push_back(img.id);
    entries = &doc;
  } else if (doc.is_object() && doc.contains("image_ids") && doc.contains("detections")) {
    const json& ids = doc["image_ids"];
    if (!ids.is_array()) throw DataError(origin + ": 'image_ids' must be an array");
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (!ids[i].is_number_integer()) {
        throw DataError(origin + ": image_ids[" + std::to_string(i) + "] is not an integer");
      }
      const auto id = ids[i].get<std::int64_t>();
      if (!annotations.has_image(id)) {
        throw DataError(origin + ": image_ids[" + std::to_string(i) + "] = " + std::to_string(id) +
                        " does not exist in the annotation set");
      }
      dump.image_ids.push_back(id);
    }
    entries = &doc["detections"];
    if (!entries->is_array()) throw DataError(origin + ": 'detections' must be an array");
  } else {
    throw DataError(origin + ": expected a results array or {image_ids, detections}");
  }
  std::sort(dump.image_ids.begin(), dump.image_ids.end());
  dump.image_ids.erase(std::unique(dump.image_ids.begin(), dump.image_ids.end()), dump.image_ids.end());

  for (std::size_t i = 0; i < entries->size(); ++i) {
    const std::string loc = origin + ": detections[" + std::to_string(i) + "]";
    const json& obj = (*entries)[i];
    if (!obj.is_object() || !obj.contains("image_id") || !obj["image_id"].is_number_integer()) {
      throw DataError(loc + ": missing integer 'image_id'");
    }
    const auto id = obj["image_id"].get<std::int64_t>();
    if (!std::binary_search(dump.image_ids.begin(), dump.image_ids.end(), id)) {
      throw DataError(loc + ": image_id " + std::to_string(id) + " is not covered by the dump");
    }
    dump.detections[id].push_back(parse_entry(obj, annotations, loc));
  }
  return dump;
}

ExternalDetectionDump load_detection_dump(const std::filesystem::path& path, const AnnotationSet& annotations) {
  return parse_detection_dump(io::read_file(path), annotations, path.string());
}

ExternalEvaluation evaluate_external(const AnnotationSet& annotations, const ExternalDetectionDump& dump,
                                     const ExternalDetectionDump& clean_dump, std::string_view target_category,
                                     double theta) {
  if (!(theta > 0.0 && theta < 1.0)) {
    throw ConfigError("evaluate_external: theta must lie in (0, 1)");
  }
  if (dump.image_ids != clean_dump.image_ids) {
    throw DataError("evaluate_external: perturbed and clean dumps cover different image ids");
  }
  const std::int64_t target = annotations.category_id(target_category);
  auto qualifying = [&](const ExternalDetectionDump& d, std::int64_t id) {
    const auto& found = d.for_image(id);
    return static_cast<std::size_t>(std::count_if(found.begin(), found.end(), [&](const ExternalDetection& e) {
      return e.category_id == target && e.score > theta;
    }));
  };
  ExternalEvaluation out;
  std::vector<std::size_t> clean_counts;
  std::vector<std::size_t> attacked_counts;
  for (std::int64_t id : clean_dump.image_ids) {
    const std::size_t clean = qualifying(clean_dump, id);
    if (clean == 0) continue;
    out.curated_ids.push_back(id);
    clean_counts.push_back(clean);
    attacked_counts.push_back(qualifying(dump, id));
  }
  const std::string name(target_category);
  const int class_id = static_cast<int>(target);
  out.clean = report_from_counts(clean_counts, theta, class_id, name, std::nullopt);
  out.attacked = report_from_counts(attacked_counts, theta, class_id, name, std::nullopt);
  return out;
}

}  // namespace udos
