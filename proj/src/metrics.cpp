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

#include "udos/metrics.hpp"

#include <algorithm>
#include <iomanip>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "udos/errors.hpp"

namespace udos {

using nlohmann::json;

std::size_t count_qualifying(const DetectionSet& detections, double theta, std::optional<int> target_class) {
  return static_cast<std::size_t>(std::count_if(detections.begin(), detections.end(), [&](const Detection& d) {
    return d.p_obj > theta && (!target_class || d.class_id == *target_class);
  }));
}

BlindDegreeReport report_from_counts(std::span<const std::size_t> counts, double theta, int class_id,
                                     std::string class_name, std::optional<double> v_linf) {
  BlindDegreeReport r;
  r.class_id = class_id;
  r.class_name = std::move(class_name);
  r.theta = theta;
  r.n = counts.size();
  r.v_linf = v_linf;
  if (counts.empty()) return r;
  std::size_t images = 0;
  std::size_t instances = 0;
  for (std::size_t c : counts) {
    images += c > 0 ? 1 : 0;
    instances += c;
  }
  const double n = static_cast<double>(counts.size());
  r.b_img = static_cast<double>(images) / n;
  r.b_ins = static_cast<double>(instances) / n;
  if (r.b_img < 0.0 || r.b_img > 1.0 || r.b_ins < r.b_img) {
    throw NumericalError("blind degree report violates its range invariants");
  }
  return r;
}

bool indicator(const DetectorWeights<double>& weights, const Image& image, const PerturbationD& v, double theta,
               std::optional<int> target_class) {
  const DetectionSet found = detect(weights, apply_perturbation(image, v.data), theta);
  return count_qualifying(found, theta, target_class) > 0;
}

std::vector<std::size_t> qualifying_counts(const CuratedDataset& curated, const DetectorWeights<double>& weights,
                                           const PerturbationD& v, double theta) {
  std::vector<std::size_t> counts(curated.size());
  const int target = curated.target_class.id;
  for (std::size_t i = 0; i < curated.size(); ++i) {
    counts[i] = count_qualifying(detect(weights, apply_perturbation(curated.image(i), v.data), theta), theta, target);
  }
  return counts;
}

BlindDegreeReport evaluate_blind_degree(const CuratedDataset& curated, const DetectorWeights<double>& weights,
                                        const PerturbationD& v, double theta) {
  if (curated.empty()) {
    throw ConfigError("blind degree: curated set is empty");
  }
  const auto counts = qualifying_counts(curated, weights, v, theta);
  return report_from_counts(counts, theta, curated.target_class.id, curated.target_class.name,
                            compute_norm(v, NormKind::kLinf));
}

double image_blind_degree(const CuratedDataset& curated, const DetectorWeights<double>& weights,
                          const PerturbationD& v, double theta) {
  return evaluate_blind_degree(curated, weights, v, theta).b_img;
}

double instance_blind_degree(const CuratedDataset& curated, const DetectorWeights<double>& weights,
                             const PerturbationD& v, double theta) {
  return evaluate_blind_degree(curated, weights, v, theta).b_ins;
}

std::string report_json(const BlindDegreeReport& r) {
  json doc = {{"class_id", r.class_id}, {"class_name", r.class_name}, {"b_img", r.b_img}, {"b_ins", r.b_ins},
              {"theta", r.theta},       {"n", r.n}};
  doc["v_linf"] = r.v_linf ? json(*r.v_linf) : json(nullptr);
  return doc.dump(1) + "\n";
}

// ---------------------------------------------------------------------------

std::string to_string(SweepAxis axis) { return axis == SweepAxis::kEpoch ? "epoch" : "norm"; }
std::string to_string(BlindLevel level) { return level == BlindLevel::kImage ? "image" : "instance"; }

namespace {

double axis_value(const CurveSample& s, SweepAxis axis) {
  return axis == SweepAxis::kEpoch ? static_cast<double>(s.epoch) : s.norm;
}

double level_value(const CurveSample& s, BlindLevel level) {
  return level == BlindLevel::kImage ? s.b_img : s.b_ins;
}

}  // namespace

double curve_area(const BlindDegreeCurve& curve, SweepAxis axis, BlindLevel level) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.samples.size(); ++i) {
    const CurveSample& a = curve.samples[i - 1];
    const CurveSample& b = curve.samples[i];
    area += 0.5 * (axis_value(b, axis) - axis_value(a, axis)) * (level_value(a, level) + level_value(b, level));
  }
  return area;
}

RankColumn rank_resilience(std::span<const BlindDegreeCurve> curves, SweepAxis axis, BlindLevel level) {
  RankColumn column;
  column.axis = axis;
  column.level = level;
  if (curves.empty()) return column;
  const auto& ref = curves.front().samples;
  if (ref.empty()) {
    throw ConfigError("rank_resilience: curves must not be empty");
  }
  for (const auto& c : curves) {
    bool same = c.samples.size() == ref.size();
    for (std::size_t i = 0; same && i < ref.size(); ++i) {
      same = axis_value(c.samples[i], axis) == axis_value(ref[i], axis);
    }
    if (!same) {
      throw ConfigError("rank_resilience: class '" + c.class_name + "' uses a different " + to_string(axis) +
                        " grid");
    }
  }
  for (const auto& c : curves) {
    column.order.push_back(
        RankedClass{c.class_id, c.class_name, curve_area(c, axis, level), level_value(c.samples.back(), level), false});
  }
  std::stable_sort(column.order.begin(), column.order.end(), [](const RankedClass& a, const RankedClass& b) {
    if (a.area != b.area) return a.area > b.area;
    if (a.final_value != b.final_value) return a.final_value > b.final_value;
    return a.class_id < b.class_id;
  });
  for (std::size_t i = 1; i < column.order.size(); ++i) {
    RankedClass& prev = column.order[i - 1];
    RankedClass& cur = column.order[i];
    if (prev.area == cur.area && prev.final_value == cur.final_value) {
      prev.tied = true;
      cur.tied = true;
    }
  }
  return column;
}

ResilienceRanking rank_all(std::span<const BlindDegreeCurve> epoch_curves,
                           std::span<const BlindDegreeCurve> norm_curves) {
  return ResilienceRanking{
      rank_resilience(epoch_curves, SweepAxis::kEpoch, BlindLevel::kImage),
      rank_resilience(epoch_curves, SweepAxis::kEpoch, BlindLevel::kInstance),
      rank_resilience(norm_curves, SweepAxis::kNorm, BlindLevel::kImage),
      rank_resilience(norm_curves, SweepAxis::kNorm, BlindLevel::kInstance),
  };
}

std::string render_ranking_table(const ResilienceRanking& ranking) {
  const RankColumn* cols[4] = {&ranking.epoch_image, &ranking.epoch_instance, &ranking.norm_image,
                               &ranking.norm_instance};
  std::size_t rows = 0;
  std::size_t width = 8;
  for (const RankColumn* c : cols) {
    rows = std::max(rows, c->order.size());
    for (const auto& r : c->order) width = std::max(width, r.class_name.size() + (r.tied ? 1 : 0));
  }
  width += 2;
  std::ostringstream out;
  auto cell = [&](const std::string& text) { out << std::left << std::setw(static_cast<int>(width)) << text; };
  out << "rank  ";
  cell("Epochs");
  cell("");
  cell("Norm");
  out << "\n      ";
  cell("Image");
  cell("Instance");
  cell("Image");
  out << "Instance\n";
  for (std::size_t i = 0; i < rows; ++i) {
    out << std::left << std::setw(6) << (i + 1);
    for (int c = 0; c < 4; ++c) {
      std::string text;
      if (i < cols[c]->order.size()) {
        const RankedClass& r = cols[c]->order[i];
        text = r.class_name + (r.tied ? "*" : "");
      }
      if (c < 3) {
        cell(text);
      } else {
        out << text;
      }
    }
    out << "\n";
  }
  bool any_tie = false;
  for (const RankColumn* c : cols) {
    for (const auto& r : c->order) any_tie = any_tie || r.tied;
  }
  if (any_tie) out << "* tied on area and final value; ordered by class id\n";
  return out.str();
}

std::string ranking_json(const ResilienceRanking& ranking) {
  auto column = [](const RankColumn& c) {
    json entries = json::array();
    for (const auto& r : c.order) {
      entries.push_back({{"class_id", r.class_id},
                         {"class_name", r.class_name},
                         {"area", r.area},
                         {"final_value", r.final_value},
                         {"tied", r.tied}});
    }
    return json{{"axis", to_string(c.axis)}, {"level", to_string(c.level)}, {"order", entries}};
  };
  json doc = {{"epoch_image", column(ranking.epoch_image)},
              {"epoch_instance", column(ranking.epoch_instance)},
              {"norm_image", column(ranking.norm_image)},
              {"norm_instance", column(ranking.norm_instance)}};
  return doc.dump(1) + "\n";
}

}  // namespace udos
