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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "udos/curation.hpp"
#include "udos/detector.hpp"
#include "udos/metrics.hpp"
#include "udos/tensor.hpp"

namespace udos {

/// Hyperparameters of the universal suppression attack. Intensities are on
/// the [0, 255] scale. Defaults are the values used for the COCO study.
struct AttackConfig {
  int n_epoch = 250;
  double alpha = 20.0;
  double xi = 10.0;
  int inner_steps = 1;
  double theta = 0.7;
  std::optional<int> target_class;
  std::uint64_t seed = 0;

  void validate() const;  // throws ConfigError
};

/// Sum of p_obj over proposals (cells past the objectness gate, before NMS),
/// restricted to proposals classified as `target_class` when given. Writes
/// d(sum)/d(head values) into `d_head` when non-null; the gradient flows
/// through the winning class probability only.
double suppression_objective(const RawPredictions<double>& raw, std::optional<int> target_class,
                             RawPredictions<double>::Matrix* d_head = nullptr);

/// Objective on clamp(image + v + v_i).
double objective(const DetectorWeights<double>& weights, const Image& image, const PerturbationD& v,
                 const PerturbationD& v_i, std::optional<int> target_class);

/// Mean absolute entry of v + v_i (L1 norm divided by the entry count).
double regularizer(const PerturbationD& v, const PerturbationD& v_i);

/// Value and d/d(v_i) of objective + regularizer. The clamp to the valid
/// intensity range is treated as identity in the backward pass. The
/// regularizer uses sign(0) = 0.
LossGradient<double> attack_loss_gradient(const DetectorWeights<double>& weights, const Image& image,
                                          const PerturbationD& v, const PerturbationD& v_i,
                                          std::optional<int> target_class);

struct DescentResult {
  PerturbationD v_i;
  double initial_objective = 0.0;  // objective at v_i = 0
  bool ok = true;
  std::string diagnostic;
};

/// v_i starts at zero and takes inner_steps steps
/// v_i <- v_i - alpha * grad(objective + regularizer). A non-finite gradient
/// aborts the image: ok == false and v_i is zero.
DescentResult per_image_descend(const DetectorWeights<double>& weights, const Image& image, const PerturbationD& v,
                                const AttackConfig& config);

struct TraceRecord {
  int epoch = 0;
  double linf_norm = 0.0;
  double l1_norm_normalized = 0.0;
  double mean_objective = 0.0;
  double b_img = 0.0;
  double b_ins = 0.0;
};

struct AttackTrace {
  std::vector<TraceRecord> records;  // one per completed epoch
};

struct AttackResult {
  PerturbationD v;
  AttackTrace trace;
  std::vector<std::string> diagnostics;
};

/// Runs n_epoch passes over the curated images in order. Each image yields
/// v_i from per_image_descend and the universal perturbation becomes
/// project_linf(v + v_i, xi). After every epoch both blind degrees are
/// measured on the whole curated set at config.theta.
///
/// The attack targets config.target_class when set; otherwise it suppresses
/// every class while metrics stay restricted to the curated class.
AttackResult synthesize_universal(const CuratedDataset& curated, const DetectorWeights<double>& weights,
                                  const AttackConfig& config,
                                  const std::function<void(const TraceRecord&)>& on_epoch = {});

std::string trace_csv(const AttackTrace& trace);

/// Perturbation artifact: JSON with shape, xi, intensity scale and values
/// in interleaved order. Round-trips bit-exactly.
std::string serialize_perturbation(const PerturbationD& v);
PerturbationD deserialize_perturbation(const std::string& text, const std::string& origin = "<memory>");
void save_perturbation(const PerturbationD& v, const std::filesystem::path& path);
PerturbationD load_perturbation(const std::filesystem::path& path);

}  // namespace udos
