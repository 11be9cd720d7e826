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
#include <memory>
#include <string>
#include <vector>

#include "udos/dataset.hpp"
#include "udos/detector.hpp"

namespace udos {

struct CuratedEntry {
  std::size_t index = 0;  // position in source->samples
  std::int64_t image_id = 0;
  DetectionSet baseline;  // clean detections at the curation threshold
};

/// Images on which the clean detector already finds the target class.
///
/// Invariant: every entry's baseline holds at least one detection with
/// class_id == target_class and p_obj > theta, and entries.size() <= max_imgs.
struct CuratedDataset {
  std::shared_ptr<const Dataset> source;
  ClassInfo target_class;
  double theta = 0.7;
  std::size_t max_imgs = 500;
  std::vector<CuratedEntry> entries;
  std::vector<std::int64_t> rejected_ids;   // no qualifying detection
  std::vector<std::int64_t> truncated_ids;  // qualified, but beyond max_imgs

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
  const Sample& sample(std::size_t i) const { return source->samples[entries[i].index]; }
  const Image& image(std::size_t i) const { return sample(i).image; }
};

/// Keeps, in dataset order, the first max_imgs images whose clean detections
/// contain the target class above theta. The rule looks only at detector
/// output, never at ground truth. An empty result is not an error.
CuratedDataset curate(std::shared_ptr<const Dataset> dataset, const DetectorWeights<double>& weights,
                      int target_class, double theta, std::size_t max_imgs);

/// The retained samples as a standalone dataset (same classes, same ids).
Dataset curated_subset(const CuratedDataset& curated);

/// JSON manifest: target class, theta, max_imgs, retained / rejected /
/// truncated ids and the detector checkpoint digest.
std::string curation_manifest(const CuratedDataset& curated, const std::string& checkpoint_digest);

}  // namespace udos
