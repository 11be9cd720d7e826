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

#include <filesystem>

#include <gtest/gtest.h>

#include "udos/errors.hpp"
#include "udos/io.hpp"
#include "udos/scenegen.hpp"

namespace udos {
namespace {

TEST(SceneGen, RenderingIsDeterministic) {
  SceneSpec spec;
  spec.seed = 7;
  const auto a = render_scene(spec, 0);
  const auto b = render_scene(spec, 0);
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
  EXPECT_FALSE(render_scene(spec, 1).first == a.first);
}

TEST(SceneGen, SingleObjectSpec) {
  SceneSpec spec;
  spec.min_objects = spec.max_objects = 1;
  for (int i = 0; i < 10; ++i) EXPECT_EQ(render_scene(spec, i).second.size(), 1u);
}

TEST(SceneGen, GroundTruthIsWellFormedAndPixelsInRange) {
  SceneSpec spec;
  spec.seed = 3;
  for (int i = 0; i < 50; ++i) {
    const auto [image, objects] = render_scene(spec, i);
    EXPECT_GE(objects.size(), static_cast<std::size_t>(spec.min_objects));
    EXPECT_LE(objects.size(), static_cast<std::size_t>(spec.max_objects));
    for (const auto& o : objects) {
      EXPECT_TRUE(o.box.well_formed());
      EXPECT_TRUE(o.box.within(spec.width, spec.height));
      EXPECT_GE(o.class_id, 0);
      EXPECT_LT(o.class_id, 5);
    }
    EXPECT_GE(image.array().minCoeff(), kIntensityMin);
    EXPECT_LE(image.array().maxCoeff(), kIntensityMax);
    EXPECT_TRUE((image.array() == image.array().round()).all());
  }
}

TEST(SceneGen, ObjectsAreVisibleInTheImage) {
  // Every object changes the pixels under its box relative to a noise-free,
  // object-free render of the same scene.
  SceneSpec spec;
  spec.noise_level = 0.0;
  spec.min_objects = spec.max_objects = 1;
  for (int i = 0; i < 20; ++i) {
    const auto [image, objects] = render_scene(spec, i);
    const Box& b = objects[0].box;
    const double corner = image(0, 0, 0);
    double differs = 0;
    for (int y = static_cast<int>(b.y1); y < static_cast<int>(b.y2); ++y) {
      for (int x = static_cast<int>(b.x1); x < static_cast<int>(b.x2); ++x) {
        differs += image(y, x, 0) != corner || image(y, x, 1) != image(0, 0, 1) || image(y, x, 2) != image(0, 0, 2);
      }
    }
    EXPECT_GT(differs / (b.width() * b.height()), 0.3) << "scene " << i;
  }
}

TEST(SceneGen, CocoFrequencyHistogramWithinTwentyPercent) {
  SceneSpec spec;
  spec.seed = 7;
  spec.class_frequency = coco_class_frequency();
  const Dataset d = generate_dataset(spec, 200);
  std::vector<double> counts(5, 0.0);
  double total = 0;
  for (const auto& s : d.samples) {
    for (const auto& o : s.objects) {
      counts[static_cast<std::size_t>(o.class_id)] += 1;
      total += 1;
    }
  }
  const auto w = coco_class_frequency();
  const double wsum = w[0] + w[1] + w[2] + w[3] + w[4];
  // Relative tolerance applies to the three large classes; the two rarest
  // classes expect about 15 and 35 objects, so their sampling noise alone
  // exceeds 20%; they get an absolute 3-sigma band instead.
  for (std::size_t c = 0; c < 5; ++c) {
    const double expected = total * w[c] / wsum;
    const double tol = std::max(0.2 * expected, 3.0 * std::sqrt(expected));
    EXPECT_NEAR(counts[c], expected, tol) << "class " << c;
  }
}

TEST(SceneGen, InvalidSpecsAreRejected) {
  SceneSpec spec;
  spec.max_object_size = 100;
  EXPECT_THROW(render_scene(spec, 0), ConfigError);
  SceneSpec crowded;
  crowded.min_objects = crowded.max_objects = 40;
  crowded.min_object_size = crowded.max_object_size = 20;
  EXPECT_THROW(generate_dataset(crowded, 1), ConfigError);
  SceneSpec weights;
  weights.class_frequency = {1, 2};
  EXPECT_THROW(generate_dataset(weights, 1), ConfigError);
}

TEST(SceneGen, DatasetSizeIdsAndDeterminism) {
  SceneSpec spec;
  const Dataset one = generate_dataset(spec, 1);
  EXPECT_EQ(one.size(), 1u);
  const Dataset a = generate_dataset(spec, 200);
  const Dataset b = generate_dataset(spec, 200);
  ASSERT_EQ(a.size(), 200u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.samples[i].id, static_cast<std::int64_t>(i + 1));
    EXPECT_FALSE(a.samples[i].objects.empty());
    EXPECT_EQ(a.samples[i].image, b.samples[i].image);
    EXPECT_EQ(a.samples[i].objects, b.samples[i].objects);
  }
}

TEST(Dataset, DefaultClassesUseCocoIds) {
  const auto classes = default_classes();
  ASSERT_EQ(classes.size(), 5u);
  EXPECT_EQ(classes[0].name, "person");
  EXPECT_EQ(classes[0].category_id, 1);
  EXPECT_EQ(classes[3].name, "stop sign");
  EXPECT_EQ(classes[3].category_id, 13);
  EXPECT_EQ(find_class(classes, "traffic light"), 4);
  EXPECT_FALSE(find_class(classes, "bus"));
}

TEST(Dataset, SaveLoadRoundTripIsByteStable) {
  const auto base = std::filesystem::temp_directory_path() / "udos_dataset_test";
  std::filesystem::remove_all(base);
  SceneSpec spec;
  spec.seed = 9;
  const Dataset d = generate_dataset(spec, 12);
  save_dataset(d, base / "a");
  const Dataset loaded = load_dataset(base / "a");
  ASSERT_EQ(loaded.size(), d.size());
  EXPECT_EQ(loaded.classes, d.classes);
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(loaded.samples[i].id, d.samples[i].id);
    EXPECT_EQ(loaded.samples[i].image, d.samples[i].image);
    EXPECT_EQ(loaded.samples[i].objects, d.samples[i].objects);
  }
  save_dataset(loaded, base / "b");
  EXPECT_EQ(io::read_file(base / "a" / "annotations.json"), io::read_file(base / "b" / "annotations.json"));
  EXPECT_EQ(io::read_file(base / "a" / "images" / "000003.ppm"), io::read_file(base / "b" / "images" / "000003.ppm"));
  // The annotation file alone is also accepted.
  EXPECT_EQ(load_dataset(base / "a" / "annotations.json").size(), 12u);
  EXPECT_THROW(load_dataset(base / "missing"), DataError);
  std::filesystem::remove_all(base);
}

}  // namespace
}  // namespace udos
