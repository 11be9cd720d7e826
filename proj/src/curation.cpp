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

#include "udos/curation.hpp"

#include <algorithm>

#include <json.hpp>

#include "udos/errors.hpp"

namespace udos {

CuratedDataset curate(std::shared_ptr<const Dataset> dataset, const DetectorWeights<double>& weights,
                      int target_class, double theta, std::size_t max_imgs) {
  if (!dataset) {
    throw ConfigError("curate: dataset is null");
  }
  if (!(theta > 0.0 && theta < 1.0)) {
    throw ConfigError("curate: theta must lie in (0, 1)");
  }
  if (max_imgs < 1) {
    throw ConfigError("curate: max_imgs must be at least 1");
  }
  if (target_class < 0 || static_cast<std::size_t>(target_class) >= dataset->classes.size()) {
    throw ConfigError("curate: unknown target class " + std::to_string(target_class));
  }

  CuratedDataset out;
  out.source = dataset;
  out.target_class = dataset->classes[static_cast<std::size_t>(target_class)];
  out.theta = theta;
  out.max_imgs = max_imgs;
  for (std::size_t i = 0; i < dataset->samples.size(); ++i) {
    const Sample& sample = dataset->samples[i];
    DetectionSet found = detect(weights, sample.image, theta);
    const bool qualifies = std::any_of(found.begin(), found.end(), [&](const Detection& d) {
      return d.class_id == target_class && d.p_obj > theta;
    });
    if (!qualifies) {
      out.rejected_ids.push_back(sample.id);
    } else if (out.entries.size() >= max_imgs) {
      out.truncated_ids.push_back(sample.id);
    } else {
      out.entries.push_back(CuratedEntry{i, sample.id, std::move(found)});
    }
  }
  return out;
}

Dataset curated_subset(const CuratedDataset& curated) {
  Dataset out;
  out.classes = curated.source->classes;
  out.samples.reserve(curated.size());
  for (std::size_t i = 0; i < curated.size(); ++i) out.samples.push_back(curated.sample(i));
  return out;
}

std::string curation_manifest(const CuratedDataset& curated, const std::string& checkpoint_digest) {
  std::vector<std::int64_t> retained;
  retained.reserve(curated.size());
  for (const auto& e : curated.entries) retained.push_back(e.image_id);
  nlohmann::json doc = {
      {"target_class", {{"id", curated.target_class.id}, {"name", curated.target_class.name},
                        {"category_id", curated.target_class.category_id}}},
      {"theta", curated.theta},
      {"max_imgs", curated.max_imgs},
      {"n_source", curated.source->size()},
      {"n_retained", retained.size()},
      {"n_rejected", curated.rejected_ids.size()},
      {"n_truncated", curated.truncated_ids.size()},
      {"retained_ids", retained},
      {"rejected_ids", curated.rejected_ids},
      {"truncated_ids", curated.truncated_ids},
      {"detector_checkpoint", checkpoint_digest},
  };
  return doc.dump(1) + "\n";
}

}  // namespace udos
