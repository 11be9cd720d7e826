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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "udos/geometry.hpp"
#include "udos/tensor.hpp"

namespace udos {

/// Dense foreground class index in [0, K) plus its label and the category id
/// used in COCO-style annotation files.
struct ClassInfo {
  int id = 0;
  std::string name;
  std::int64_t category_id = 0;

  bool operator==(const ClassInfo&) const = default;
};

/// The five stand-in classes, in dense-id order: person, car, truck,
/// stop sign, traffic light. Category ids follow COCO 2017.
std::vector<ClassInfo> default_classes();

/// Index of `name` in `classes`, or nullopt.
std::optional<int> find_class(const std::vector<ClassInfo>& classes, std::string_view name);

struct GroundTruthObject {
  int class_id = 0;
  Box box;

  bool operator==(const GroundTruthObject&) const = default;
};

struct Sample {
  std::int64_t id = 0;
  std::string file_name;
  Image image;
  std::vector<GroundTruthObject> objects;
};

struct Dataset {
  std::vector<ClassInfo> classes;
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

/// Writes `images/*.ppm` plus `annotations.json` (COCO images / annotations /
/// categories arrays) under `dir`. Output bytes depend only on the dataset.
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);

/// Reads a directory written by save_dataset, or any COCO-style annotation
/// file whose images are binary PPM files relative to the annotation file.
/// Categories map to dense class ids in file order.
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace udos
