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

#include <map>
#include <random>
#include <set>

#include <gtest/gtest.h>
#include <json.hpp>

#include "udos/coco.hpp"
#include "udos/errors.hpp"

namespace udos {
namespace {

using nlohmann::json;

json minimal_doc() {
  return json::parse(R"({
    "images": [{"id": 1, "file_name": "a.jpg", "width": 10, "height": 8}],
    "annotations": [{"id": 5, "image_id": 1, "category_id": 3, "bbox": [1, 2, 3, 4],
                     "segmentation": [[1, 2, 3, 4, 5, 6]], "area": 12, "iscrowd": 0}],
    "categories": [{"id": 3, "name": "car", "supercategory": "vehicle"}]
  })");
}

TEST(Coco, MinimalFileParses) {
  const AnnotationSet set = parse_annotations(minimal_doc().dump());
  ASSERT_EQ(set.images.size(), 1u);
  ASSERT_EQ(set.annotations.size(), 1u);
  EXPECT_EQ(set.annotations[0].box, (Box{1, 2, 4, 6}));
  EXPECT_EQ(set.category_id("car"), 3);
  EXPECT_EQ(set.category_name(3), "car");
  EXPECT_THROW(set.category_id("bus"), DataError);
}

TEST(Coco, DanglingImageReferenceNamesTheId) {
  json doc = minimal_doc();
  doc["annotations"][0]["image_id"] = 42;
  try {
    parse_annotations(doc.dump(), "train.json");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("42"), std::string::npos) << msg;
    EXPECT_NE(msg.find("annotations[0]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("train.json"), std::string::npos) << msg;
  }
}

TEST(Coco, DanglingCategoryAndSchemaErrors) {
  json doc = minimal_doc();
  doc["annotations"][0]["category_id"] = 99;
  EXPECT_THROW(parse_annotations(doc.dump()), DataError);
  json no_images = minimal_doc();
  no_images.erase("images");
  EXPECT_THROW(parse_annotations(no_images.dump()), DataError);
  json bad_box = minimal_doc();
  bad_box["annotations"][0]["bbox"] = {1, 2, 3};
  EXPECT_THROW(parse_annotations(bad_box.dump()), DataError);
  json dup = minimal_doc();
  dup["images"].push_back(dup["images"][0]);
  EXPECT_THROW(parse_annotations(dup.dump()), DataError);
  EXPECT_THROW(parse_annotations("{not json"), DataError);
}

TEST(Coco, EmptyAnnotationListCountsZero) {
  json doc = minimal_doc();
  doc["annotations"] = json::array();
  const AnnotationSet set = parse_annotations(doc.dump());
  const auto counts = count_category_images(set, {"car"});
  ASSERT_EQ(counts.size(), 1u);
  EXPECT_EQ(counts[0].second, 0u);
}

TEST(Coco, CountsImagesNotBoxes) {
  json doc = minimal_doc();
  doc["images"].push_back({{"id", 2}, {"file_name", "b.jpg"}, {"width", 10}, {"height", 8}});
  doc["annotations"].push_back({{"id", 6}, {"image_id", 1}, {"category_id", 3}, {"bbox", {0, 0, 2, 2}}});
  const auto counts = count_category_images(parse_annotations(doc.dump()), {"car"});
  EXPECT_EQ(counts[0].second, 1u);
}

TEST(Coco, UnknownCategoryNameIsAnError) {
  EXPECT_THROW(count_category_images(parse_annotations(minimal_doc().dump()), {"zebra"}), DataError);
}

TEST(Coco, CountsMatchSetCardinalityOracle) {
  std::mt19937_64 rng(21);
  json doc;
  doc["categories"] = json::array();
  const std::vector<std::string> names = {"person", "car", "truck", "stop sign"};
  for (std::size_t c = 0; c < names.size(); ++c) {
    doc["categories"].push_back({{"id", 10 + c}, {"name", names[c]}});
  }
  doc["images"] = json::array();
  for (int i = 0; i < 60; ++i) doc["images"].push_back({{"id", 100 + i}, {"file_name", "x"}});
  doc["annotations"] = json::array();
  std::map<std::string, std::set<int>> truth;
  std::uniform_int_distribution<int> img(0, 59), cat(0, 3);
  for (int a = 0; a < 300; ++a) {
    const int i = img(rng), c = cat(rng);
    doc["annotations"].push_back({{"id", a}, {"image_id", 100 + i}, {"category_id", 10 + c}, {"bbox", {0, 0, 1, 1}}});
    truth[names[static_cast<std::size_t>(c)]].insert(i);
  }
  const auto counts = count_category_images(parse_annotations(doc.dump()), names);
  for (const auto& [name, n] : counts) EXPECT_EQ(n, truth[name].size()) << name;
}

TEST(Coco, SegmentationPayloadIsDiscarded) {
  // A deliberately malformed segmentation must not matter.
  json doc = minimal_doc();
  doc["annotations"][0]["segmentation"] = {{"counts", "xyz"}, {"size", {1, 2}}};
  EXPECT_NO_THROW(parse_annotations(doc.dump()));
}

TEST(Coco, VehicleSceneCategories) {
  const auto names = vehicle_scene_categories();
  EXPECT_EQ(names.size(), 8u);
  EXPECT_EQ(names.front(), "person");
}

}  // namespace
}  // namespace udos
