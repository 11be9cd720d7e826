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

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "udos/curation.hpp"
#include "udos/detector.hpp"
#include "udos/tensor.hpp"

namespace udos {

/// Surviving-detection statistics of one perturbation on one curated set.
/// b_img is the fraction of images with at least one qualifying detection,
/// b_ins the mean number of qualifying detections per image. Lower means
/// the detector is more blinded.
struct BlindDegreeReport {
  int class_id = -1;  // -1: all classes
  std::string class_name;
  double b_img = 0.0;
  double b_ins = 0.0;
  double theta = 0.7;
  std::size_t n = 0;
  std::optional<double> v_linf;
};

/// Qualifying detections (p_obj > theta, class match when given) in one set.
std::size_t count_qualifying(const DetectionSet& detections, double theta, std::optional<int> target_class);

/// Builds a report from per-image qualifying counts; checks the range
/// invariants (b_img in [0, 1], b_ins >= b_img).
BlindDegreeReport report_from_counts(std::span<const std::size_t> counts, double theta, int class_id,
                                     std::string class_name, std::optional<double> v_linf);

/// 1 iff detect(clamp(image + v), theta) holds a detection (of target_class
/// when given).
bool indicator(const DetectorWeights<double>& weights, const Image& image, const PerturbationD& v, double theta,
               std::optional<int> target_class);

/// Per-image qualifying counts over the curated set, restricted to its
/// target class.
std::vector<std::size_t> qualifying_counts(const CuratedDataset& curated, const DetectorWeights<double>& weights,
                                           const PerturbationD& v, double theta);

double image_blind_degree(const CuratedDataset& curated, const DetectorWeights<double>& weights,
                          const PerturbationD& v, double theta);
double instance_blind_degree(const CuratedDataset& curated, const DetectorWeights<double>& weights,
                             const PerturbationD& v, double theta);

/// Both blind degrees from a single detection pass.
BlindDegreeReport evaluate_blind_degree(const CuratedDataset& curated, const DetectorWeights<double>& weights,
                                        const PerturbationD& v, double theta);

std::string report_json(const BlindDegreeReport& report);

// ---------------------------------------------------------------------------
// Sweeps and resilience ranking.

struct CurveSample {
  int epoch = 0;
  double norm = 0.0;
  double b_img = 0.0;
  double b_ins = 0.0;
};

struct BlindDegreeCurve {
  int class_id = 0;
  std::string class_name;
  std::vector<CurveSample> samples;
};

enum class SweepAxis { kEpoch, kNorm };
enum class BlindLevel { kImage, kInstance };

std::string to_string(SweepAxis axis);
std::string to_string(BlindLevel level);

/// Trapezoidal area under the chosen blind degree over the chosen axis.
double curve_area(const BlindDegreeCurve& curve, SweepAxis axis, BlindLevel level);

struct RankedClass {
  int class_id = 0;
  std::string class_name;
  double area = 0.0;
  double final_value = 0.0;
  bool tied = false;  // indistinguishable from a neighbour by area and final value
};

struct RankColumn {
  SweepAxis axis = SweepAxis::kEpoch;
  BlindLevel level = BlindLevel::kImage;
  std::vector<RankedClass> order;  // most resilient first
};

/// Orders classes by descending curve area; ties fall back to the value at
/// the last sweep point (higher first), then class id. All curves must share
/// the same non-empty axis grid (ConfigError otherwise).
RankColumn rank_resilience(std::span<const BlindDegreeCurve> curves, SweepAxis axis, BlindLevel level);

/// The four columns image/instance x epoch/norm.
struct ResilienceRanking {
  RankColumn epoch_image;
  RankColumn epoch_instance;
  RankColumn norm_image;
  RankColumn norm_instance;
};

ResilienceRanking rank_all(std::span<const BlindDegreeCurve> epoch_curves,
                           std::span<const BlindDegreeCurve> norm_curves);

/// Aligned text table with columns epoch-image, epoch-instance, norm-image,
/// norm-instance.
std::string render_ranking_table(const ResilienceRanking& ranking);
std::string ranking_json(const ResilienceRanking& ranking);

}  // namespace udos
