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

#include <gtest/gtest.h>
#include <json.hpp>

#include "oracles.hpp"
#include "toy_fixture.hpp"
#include "udos/curation.hpp"
#include "udos/errors.hpp"
#include "udos/metrics.hpp"

namespace udos {
namespace {

bool qualifies(const DetectionSet& found, int target, double theta) {
  return std::any_of(found.begin(), found.end(),
                     [&](const Detection& d) { return d.class_id == target && d.p_obj > theta; });
}

TEST(Curation, MatchesBruteForceScan) {
  const auto data = testing::toy_dataset();
  const auto& w = testing::toy_detector();
  for (const auto& cls : data->classes) {
    const CuratedDataset c = curate(data, w, cls.id, 0.7, 1000);
    std::vector<std::int64_t> want;
    std::vector<std::int64_t> rejected;
    for (const auto& s : data->samples) {
      (qualifies(detect(w, s.image, 0.7), cls.id, 0.7) ? want : rejected).push_back(s.id);
    }
    ASSERT_EQ(c.size(), want.size()) << cls.name;
    for (std::size_t i = 0; i < c.size(); ++i) {
      EXPECT_EQ(c.entries[i].image_id, want[i]);
      EXPECT_EQ(c.sample(i).id, want[i]);
      EXPECT_TRUE(qualifies(c.entries[i].baseline, cls.id, 0.7));
    }
    EXPECT_EQ(c.rejected_ids, rejected);
    EXPECT_TRUE(c.truncated_ids.empty());
  }
}

TEST(Curation, TruncationKeepsDatasetOrder) {
  const auto data = testing::toy_dataset();
  const auto& w = testing::toy_detector();
  const CuratedDataset all = curate(data, w, 0, 0.7, 1000);
  ASSERT_GT(all.size(), 10u);
  const CuratedDataset few = curate(data, w, 0, 0.7, 10);
  ASSERT_EQ(few.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(few.entries[i].image_id, all.entries[i].image_id);
  EXPECT_EQ(few.truncated_ids.size(), all.size() - 10);
  EXPECT_EQ(few.truncated_ids.front(), all.entries[10].image_id);
}

TEST(Curation, SubsetAndManifest) {
  const auto data = testing::toy_dataset();
  const CuratedDataset c = curate(data, testing::toy_detector(), 1, 0.7, 25);
  const Dataset sub = curated_subset(c);
  ASSERT_EQ(sub.size(), c.size());
  EXPECT_EQ(sub.classes, data->classes);
  for (std::size_t i = 0; i < sub.size(); ++i) {
    EXPECT_EQ(sub.samples[i].id, c.entries[i].image_id);
    EXPECT_EQ(sub.samples[i].image, c.image(i));
  }
  const auto doc = nlohmann::json::parse(curation_manifest(c, "abc"));
  EXPECT_EQ(doc["detector_checkpoint"], "abc");
  EXPECT_EQ(doc["target_class"]["name"], data->classes[1].name);
  EXPECT_EQ(doc["n_retained"], c.size());
  EXPECT_EQ(doc["n_source"], data->size());
  EXPECT_EQ(doc["n_retained"].get<std::size_t>() + doc["n_rejected"].get<std::size_t>() +
                doc["n_truncated"].get<std::size_t>(),
            data->size());
}

TEST(Curation, CleanSetIsSaturated) {
  const auto data = testing::toy_dataset();
  const auto& w = testing::toy_detector();
  for (const auto& cls : data->classes) {
    const CuratedDataset c = curate(data, w, cls.id, 0.7, 100);
    if (c.empty()) continue;
    const auto v = PerturbationD::zeros_like(c.image(0), 10.0);
    EXPECT_EQ(image_blind_degree(c, w, v, 0.7), 1.0) << cls.name;
  }
}

TEST(Curation, NoQualifyingImagesIsNotAnError) {
  Dataset blank;
  blank.classes = default_classes();
  Sample s;
  s.id = 1;
  s.image = Image(64, 64, 3);
  blank.samples.push_back(s);
  const auto data = std::make_shared<const Dataset>(blank);
  const CuratedDataset c = curate(data, testing::toy_detector(), 0, 0.7, 10);
  EXPECT_TRUE(c.empty());
  EXPECT_EQ(c.rejected_ids, std::vector<std::int64_t>{1});
}

TEST(Curation, RejectsBadArguments) {
  const auto data = testing::toy_dataset();
  const auto& w = testing::toy_detector();
  EXPECT_THROW(curate(nullptr, w, 0, 0.7, 10), ConfigError);
  EXPECT_THROW(curate(data, w, 0, 1.0, 10), ConfigError);
  EXPECT_THROW(curate(data, w, 0, 0.7, 0), ConfigError);
  EXPECT_THROW(curate(data, w, 9, 0.7, 10), ConfigError);
}

}  // namespace
}  // namespace udos
