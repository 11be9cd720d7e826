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

#include "udos/coco.hpp"

#include <set>

#include <json.hpp>

#include "udos/errors.hpp"
#include "udos/io.hpp"

namespace udos {

using nlohmann::json;

namespace {

std::string where(const std::string& origin, const char* array, std::size_t index) {
  return origin + ": " + array + "[" + std::to_string(index) + "]";
}

std::int64_t require_int(const json& obj, const char* key, const std::string& loc) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number_integer()) {
    throw DataError(loc + ": missing or non-integer '" + key + "'");
  }
  return it->get<std::int64_t>();
}

const json& require_array(const json& doc, const char* key, const std::string& origin) {
  auto it = doc.find(key);
  if (it == doc.end() || !it->is_array()) {
    throw DataError(origin + ": missing array '" + key + "'");
  }
  return *it;
}

}  // namespace

std::int64_t AnnotationSet::category_id(std::string_view name) const {
  auto it = category_by_name.find(name);
  if (it == category_by_name.end()) {
    throw DataError("unknown category '" + std::string(name) + "'");
  }
  return it->second;
}

std::string AnnotationSet::category_name(std::int64_t id) const {
  for (const auto& c : categories) {
    if (c.id == id) return c.name;
  }
  throw DataError("unknown category id " + std::to_string(id));
}

AnnotationSet parse_annotations(std::string_view json_text, const std::string& origin) {
  // Drop polygon/RLE payloads during parsing; they dominate COCO file size.
  json::parser_callback_t drop_segmentation = [](int /*depth*/, json::parse_event_t event, json& parsed) {
    return !(event == json::parse_event_t::key && parsed == "segmentation");
  };
  json doc;
  try {
    doc = json::parse(json_text.begin(), json_text.end(), drop_segmentation);
  } catch (const json::parse_error& e) {
    throw DataError(origin + ": invalid JSON: " + e.what());
  }
  if (!doc.is_object()) {
    throw DataError(origin + ": top level must be an object");
  }

  AnnotationSet set;
  const json& images = require_array(doc, "images", origin);
  const json& categories = require_array(doc, "categories", origin);
  static const json kEmpty = json::array();
  const json& annotations = doc.contains("annotations") ? require_array(doc, "annotations", origin) : kEmpty;

  set.images.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string loc = where(origin, "images", i);
    const json& obj = images[i];
    if (!obj.is_object()) throw DataError(loc + ": expected object");
    AnnotatedImage image;
    image.id = require_int(obj, "id", loc);
    if (auto it = obj.find("file_name"); it != obj.end()) {
      if (!it->is_string()) throw DataError(loc + ": 'file_name' must be a string");
      image.file_name = it->get<std::string>();
    }
    if (obj.contains("width")) image.width = static_cast<int>(require_int(obj, "width", loc));
    if (obj.contains("height")) image.height = static_cast<int>(require_int(obj, "height", loc));
    if (!set.image_index.emplace(image.id, set.images.size()).second) {
      throw DataError(loc + ": duplicate image id " + std::to_string(image.id));
    }
    set.images.push_back(std::move(image));
  }

  std::set<std::int64_t> category_ids;
  for (std::size_t i = 0; i < categories.size(); ++i) {
    const std::string loc = where(origin, "categories", i);
    const json& obj = categories[i];
    if (!obj.is_object()) throw DataError(loc + ": expected object");
    Category category;
    category.id = require_int(obj, "id", loc);
    auto name = obj.find("name");
    if (name == obj.end() || !name->is_string()) {
      throw DataError(loc + ": missing or non-string 'name'");
    }
    category.name = name->get<std::string>();
    if (!category_ids.insert(category.id).second) {
      throw DataError(loc + ": duplicate category id " + std::to_string(category.id));
    }
    if (!set.category_by_name.emplace(category.name, category.id).second) {
      throw DataError(loc + ": duplicate category name '" + category.name + "'");
    }
    set.categories.push_back(std::move(category));
  }

  set.annotations.reserve(annotations.size());
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    const std::string loc = where(origin, "annotations", i);
    const json& obj = annotations[i];
    if (!obj.is_object()) throw DataError(loc + ": expected object");
    Annotation ann;
    ann.id = obj.contains("id") ? require_int(obj, "id", loc) : static_cast<std::int64_t>(i);
    ann.image_id = require_int(obj, "image_id", loc);
    ann.category_id = require_int(obj, "category_id", loc);
    if (!set.has_image(ann.image_id)) {
      throw DataError(loc + ": image_id " + std::to_string(ann.image_id) + " does not exist");
    }
    if (category_ids.count(ann.category_id) == 0) {
      throw DataError(loc + ": category_id " + std::to_string(ann.category_id) + " does not exist");
    }
    auto bbox = obj.find("bbox");
    if (bbox == obj.end() || !bbox->is_array() || bbox->size() != 4) {
      throw DataError(loc + ": 'bbox' must be [x, y, w, h]");
    }
    for (const auto& v : *bbox) {
      if (!v.is_number()) throw DataError(loc + ": non-numeric bbox entry");
    }
    const double x = (*bbox)[0].get<double>();
    const double y = (*bbox)[1].get<double>();
    const double w = (*bbox)[2].get<double>();
    const double h = (*bbox)[3].get<double>();
    if (w < 0.0 || h < 0.0) {
      throw DataError(loc + ": negative bbox extent");
    }
    ann.box = Box{x, y, x + w, y + h};
    set.annotations.push_back(ann);
  }
  return set;
}

AnnotationSet load_annotations(const std::filesystem::path& path) {
  return parse_annotations(io::read_file(path), path.string());
}

std::vector<std::pair<std::string, std::size_t>> count_category_images(
    const AnnotationSet& annotations, const std::vector<std::string>& categories) {
  std::map<std::int64_t, std::set<std::int64_t>> images_by_category;
  std::vector<std::int64_t> ids;
  ids.reserve(categories.size());
  for (const auto& name : categories) {
    ids.push_back(annotations.category_id(name));
    images_by_category[ids.back()];
  }
  for (const auto& ann : annotations.annotations) {
    auto it = images_by_category.find(ann.category_id);
    if (it != images_by_category.end()) it->second.insert(ann.image_id);
  }
  std::vector<std::pair<std::string, std::size_t>> out;
  out.reserve(categories.size());
  for (std::size_t i = 0; i < categories.size(); ++i) {
    out.emplace_back(categories[i], images_by_category[ids[i]].size());
  }
  return out;
}

std::vector<std::string> vehicle_scene_categories() {
  return {"person", "bicycle", "car", "truck", "bus", "motorcycle", "traffic light", "stop sign"};
}

}  // namespace udos
