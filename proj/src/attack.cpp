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

#include "udos/attack.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "udos/errors.hpp"
#include "udos/io.hpp"

namespace udos {

using nlohmann::json;

void AttackConfig::validate() const {
  if (n_epoch < 0 || inner_steps < 0) {
    throw ConfigError("AttackConfig: n_epoch and inner_steps must be non-negative");
  }
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw ConfigError("AttackConfig: alpha must be finite and non-negative");
  }
  if (!(xi >= 0.0) || !std::isfinite(xi)) {
    throw ConfigError("AttackConfig: xi must be finite and non-negative");
  }
  if (!(theta > 0.0 && theta < 1.0)) {
    throw ConfigError("AttackConfig: theta must lie in (0, 1)");
  }
  if (target_class && *target_class < 0) {
    throw ConfigError("AttackConfig: target class must be non-negative");
  }
}

double suppression_objective(const RawPredictions<double>& raw, std::optional<int> target_class,
                             RawPredictions<double>::Matrix* d_head) {
  double total = 0.0;
  for (int cell = 0; cell < raw.cells(); ++cell) {
    if (!(sigmoid(raw.objectness_logit(cell)) > kObjectnessGate)) continue;
    const Eigen::VectorXd probs = softmax(raw.class_logits(cell));
    const int k = argmax_first(probs);
    if (target_class && k != *target_class) continue;
    const double p = probs[k];
    total += p;
    if (d_head != nullptr) {
      // d p_k / d logit_j = p_k (delta_jk - p_j)
      for (int j = 0; j < raw.num_classes; ++j) {
        (*d_head)(1 + j, cell) += p * ((j == k ? 1.0 : 0.0) - probs[j]);
      }
    }
  }
  return total;
}

namespace {

Image perturbed_input(const Image& image, const PerturbationD& v, const PerturbationD& v_i) {
  require_same_shape(image, v.data, "attack");
  require_same_shape(image, v_i.data, "attack");
  Image x = image;
  x.array() += v.data.array() + v_i.data.array();
  return clamp_intensity(std::move(x));
}

}  // namespace

double objective(const DetectorWeights<double>& weights, const Image& image, const PerturbationD& v,
                 const PerturbationD& v_i, std::optional<int> target_class) {
  return suppression_objective(forward(weights, perturbed_input(image, v, v_i)), target_class);
}

double regularizer(const PerturbationD& v, const PerturbationD& v_i) {
  require_same_shape(v.data, v_i.data, "regularizer");
  if (v.data.size() == 0) return 0.0;
  return (v.data.array() + v_i.data.array()).abs().sum() / static_cast<double>(v.data.size());
}

LossGradient<double> attack_loss_gradient(const DetectorWeights<double>& weights, const Image& image,
                                          const PerturbationD& v, const PerturbationD& v_i,
                                          std::optional<int> target_class) {
  const HeadLoss<double> loss = [&](const RawPredictions<double>& raw, RawPredictions<double>::Matrix& d_head) {
    return suppression_objective(raw, target_class, &d_head);
  };
  // Straight-through at the clamp: d(input)/d(v_i) is taken as identity.
  LossGradient<double> out = input_gradient(weights, perturbed_input(image, v, v_i), loss);
  const auto sum = (v.data.array() + v_i.data.array()).eval();
  const double n = static_cast<double>(sum.size());
  out.value += sum.abs().sum() / n;
  out.gradient.array() += sum.sign() / n;
  return out;
}

DescentResult per_image_descend(const DetectorWeights<double>& weights, const Image& image, const PerturbationD& v,
                                const AttackConfig& config) {
  DescentResult result;
  result.v_i = PerturbationD::zeros_like(image, v.xi);
  if (config.inner_steps == 0) {
    result.initial_objective = objective(weights, image, v, result.v_i, config.target_class);
    return result;
  }
  try {
    for (int step = 0; step < config.inner_steps; ++step) {
      const LossGradient<double> lg = attack_loss_gradient(weights, image, v, result.v_i, config.target_class);
      if (step == 0) result.initial_objective = lg.value - regularizer(v, result.v_i);
      result.v_i.data.array() -= config.alpha * lg.gradient.array();
    }
  } catch (const NumericalError& e) {
    result.ok = false;
    result.diagnostic = e.what();
    result.v_i.data.array().setZero();
  }
  return result;
}

AttackResult synthesize_universal(const CuratedDataset& curated, const DetectorWeights<double>& weights,
                                  const AttackConfig& config, const std::function<void(const TraceRecord&)>& on_epoch) {
  config.validate();
  if (curated.empty()) {
    throw ConfigError("synthesize_universal: curated set is empty");
  }
  AttackResult result;
  result.v = PerturbationD::zeros_like(curated.image(0), config.xi);
  for (int epoch = 1; epoch <= config.n_epoch; ++epoch) {
    double objective_sum = 0.0;
    std::size_t objective_count = 0;
    for (std::size_t i = 0; i < curated.size(); ++i) {
      DescentResult step = per_image_descend(weights, curated.image(i), result.v, config);
      if (!step.ok) {
        result.diagnostics.push_back("epoch " + std::to_string(epoch) + ", image " +
                                     std::to_string(curated.entries[i].image_id) + ": " + step.diagnostic);
        continue;
      }
      objective_sum += step.initial_objective;
      ++objective_count;
      result.v.data.array() += step.v_i.data.array();
      result.v = project_linf(std::move(result.v), config.xi);
    }
    const BlindDegreeReport report = evaluate_blind_degree(curated, weights, result.v, config.theta);
    TraceRecord record;
    record.epoch = epoch;
    record.linf_norm = compute_norm(result.v, NormKind::kLinf);
    record.l1_norm_normalized = normalized_l1(result.v.data);
    record.mean_objective = objective_count ? objective_sum / static_cast<double>(objective_count) : 0.0;
    record.b_img = report.b_img;
    record.b_ins = report.b_ins;
    result.trace.records.push_back(record);
    if (on_epoch) on_epoch(record);
  }
  return result;
}

std::string trace_csv(const AttackTrace& trace) {
  std::ostringstream out;
  out << "epoch,linf_norm,l1_norm_normalized,mean_objective,b_img,b_ins\n";
  for (const auto& r : trace.records) {
    out << r.epoch << ',' << io::format_double(r.linf_norm) << ',' << io::format_double(r.l1_norm_normalized) << ','
        << io::format_double(r.mean_objective) << ',' << io::format_double(r.b_img) << ','
        << io::format_double(r.b_ins) << '\n';
  }
  return out.str();
}

std::string serialize_perturbation(const PerturbationD& v) {
  const auto& a = v.data.array();
  json doc = {{"format", "udos-perturbation"},
              {"version", 1},
              {"height", v.data.height()},
              {"width", v.data.width()},
              {"channels", v.data.channels()},
              {"layout", "hwc"},
              {"xi", v.xi},
              {"scale", {kIntensityMin, kIntensityMax}},
              {"values", std::vector<double>(a.data(), a.data() + a.size())}};
  return doc.dump() + "\n";
}

PerturbationD deserialize_perturbation(const std::string& text, const std::string& origin) {
  try {
    const json doc = json::parse(text);
    if (doc.at("format").get<std::string>() != "udos-perturbation" || doc.at("version").get<int>() != 1) {
      throw DataError(origin + ": not a version-1 perturbation artifact");
    }
    const int h = doc.at("height").get<int>();
    const int w = doc.at("width").get<int>();
    const int c = doc.at("channels").get<int>();
    const auto values = doc.at("values").get<std::vector<double>>();
    if (h <= 0 || w <= 0 || c <= 0 ||
        values.size() != static_cast<std::size_t>(h) * static_cast<std::size_t>(w) * static_cast<std::size_t>(c)) {
      throw DataError(origin + ": shape and value count disagree");
    }
    PerturbationD v;
    v.xi = doc.at("xi").get<double>();
    v.data = Image(h, w, c, Eigen::Map<const Image::Array>(values.data(), static_cast<Eigen::Index>(values.size())));
    return v;
  } catch (const json::exception& e) {
    throw DataError(origin + ": malformed perturbation: " + e.what());
  }
}

void save_perturbation(const PerturbationD& v, const std::filesystem::path& path) {
  io::write_file_atomic(path, serialize_perturbation(v));
}

PerturbationD load_perturbation(const std::filesystem::path& path) {
  return deserialize_perturbation(io::read_file(path), path.string());
}

}  // namespace udos
