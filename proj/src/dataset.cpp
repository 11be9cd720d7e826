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

#include "udos/dataset.hpp"

#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "udos/coco.hpp"
#include "udos/errors.hpp"
#include "udos/io.hpp"

namespace udos {

using nlohmann::json;

std::vector<ClassInfo> default_classes() {
  return {
      {0, "person", 1},
      {1, "car", 3},
      {2, "truck", 8},
      {3, "stop sign", 13},
      {4, "traffic light", 10},
  };
}

std::optional<int> find_class(const std::vector<ClassInfo>& classes, std::string_view name) {
  for (const auto& c : classes) {
    if (c.name == name) return c.id;
  }
  return std::nullopt;
}

namespace {

std::string default_file_name(std::int64_t id) {
  std::ostringstream name;
  name << "images/" << std::setw(6) << std::setfill('0') << id << ".ppm";
  return name.str();
}

}  // namespace

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "images");
  json images = json::array();
  json annotations = json::array();
  json categories = json::array();
  for (const auto& c : dataset.classes) {
    categories.push_back({{"id", c.category_id}, {"name", c.name}});
  }
  std::int64_t next_annotation = 1;
  for (const auto& sample : dataset.samples) {
    const std::string file_name = sample.file_name.empty() ? default_file_name(sample.id) : sample.file_name;
    io::write_file_atomic(dir / file_name, io::encode_ppm(sample.image));
    images.push_back({{"id", sample.id},
                      {"file_name", file_name},
                      {"width", sample.image.width()},
                      {"height", sample.image.height()}});
    for (const auto& obj : sample.objects) {
      const Box& b = obj.box;
      annotations.push_back({{"id", next_annotation++},
                             {"image_id", sample.id},
                             {"category_id", dataset.classes.at(static_cast<std::size_t>(obj.class_id)).category_id},
                             {"bbox", {b.x1, b.y1, b.width(), b.height()}},
                             {"area", b.area()},
                             {"iscrowd", 0}});
    }
  }
  json doc = {{"images", images}, {"annotations", annotations}, {"categories", categories}};
  io::write_file_atomic(dir / "annotations.json", doc.dump(1) + "\n");
}

Dataset load_dataset(const std::filesystem::path& dir) {
  const std::filesystem::path ann_path =
      std::filesystem::is_directory(dir) ? dir / "annotations.json" : dir;
  const std::filesystem::path root = ann_path.parent_path();
  AnnotationSet set = load_annotations(ann_path);

  Dataset dataset;
  std::map<std::int64_t, int> dense;
  for (std::size_t i = 0; i < set.categories.size(); ++i) {
    const int id = static_cast<int>(i);
    dataset.classes.push_back(ClassInfo{id, set.categories[i].name, set.categories[i].id});
    dense[set.categories[i].id] = id;
  }
  dataset.samples.reserve(set.images.size());
  for (const auto& info : set.images) {
    Sample sample;
    sample.id = info.id;
    sample.file_name = info.file_name;
    const std::filesystem::path image_path = root / info.file_name;
    sample.image = io::decode_ppm(io::read_file(image_path), image_path.string());
    if ((info.width != 0 && info.width != sample.image.width()) ||
        (info.height != 0 && info.height != sample.image.height())) {
      throw DataError(image_path.string() + ": size disagrees with annotation entry");
    }
    dataset.samples.push_back(std::move(sample));
  }
  for (const auto& ann : set.annotations) {
    Sample& sample = dataset.samples[set.image_index.at(ann.image_id)];
    sample.objects.push_back(GroundTruthObject{dense.at(ann.category_id), ann.box});
  }
  return dataset;
}

}  // namespace udos
