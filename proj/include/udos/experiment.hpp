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

#include "udos/attack.hpp"
#include "udos/dataset.hpp"
#include "udos/detector.hpp"
#include "udos/metrics.hpp"
#include "udos/scenegen.hpp"

namespace udos {

/// Declarative description of a full per-class curate / attack / sweep run.
///
/// JSON form (every key optional except where noted):
///   {
///     "seed": 7,
///     "output_dir": "runs/toy",                       (required)
///     "dataset": {"synthetic": {"n_images": 400, "height": 64, ...}}
///              | {"path": "data/toy"},
///     "detector": {"weights": "detector.json"}
///               | {"train": {"epochs": 30, "batch_size": 8, ...}},
///     "classes": ["person", "car"],       (absent: all; empty: no attacks)
///     "attack": {"n_epoch": 50, "alpha": 600, "xi": 10, "inner_steps": 1,
///                "theta": 0.7, "targeted": true, "max_imgs": 100},
///     "sweep": {"epochs": [0, 10, 20], "xi_grid": [0, 2, 4, 6, 8, 10]}
///   }
/// The synthetic scene seed and the training seed default to "seed".
/// Relative paths inside a config file resolve against the file's directory.
struct ExperimentConfig {
  std::uint64_t seed = 7;
  std::filesystem::path output_dir;

  std::optional<std::filesystem::path> dataset_path;  // otherwise synthetic
  SceneSpec scene;
  std::int64_t n_images = 400;

  std::optional<std::filesystem::path> weights_path;  // otherwise trained
  TrainOptions train;

  std::optional<std::vector<std::string>> classes;  // unset: every dataset class
  AttackConfig attack;
  bool targeted = true;
  std::size_t max_imgs = 100;

  std::vector<int> epoch_grid;
  std::vector<double> xi_grid;

  void validate() const;  // throws ConfigError
};

/// Toy defaults: 400 synthetic scenes, 30 training epochs, 50 attack epochs
/// at alpha 600 and xi 10, 100 images per class, epoch checkpoints every
/// 5 epochs and a xi grid of 0..10 in steps of 1.
ExperimentConfig default_experiment_config();

ExperimentConfig parse_experiment_config(const std::string& json_text,
                                         const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
/// Canonical JSON of the resolved config (sorted keys, no callbacks).
std::string experiment_config_json(const ExperimentConfig& config);

/// Blind degree at each epoch checkpoint. Epoch 0 is the clean baseline.
BlindDegreeCurve epoch_sweep(const AttackTrace& trace, const BlindDegreeReport& baseline,
                             const std::vector<int>& epochs, int class_id, const std::string& class_name);

struct NormSweepPoint {
  double xi = 0.0;
  int epoch = 0;           // snapshot used; 0 means the clean baseline
  std::string status;      // "snapshot" or "baseline"
};

/// Blind degree against the xi grid from a single full-budget run: each grid
/// value takes the last epoch snapshot whose recorded ||v||inf does not
/// exceed it, or the clean baseline when there is none. The curve's norm
/// axis holds the grid values.
BlindDegreeCurve norm_sweep(const AttackTrace& trace, const BlindDegreeReport& baseline,
                            const std::vector<double>& xi_grid, int class_id, const std::string& class_name,
                            std::vector<NormSweepPoint>* points = nullptr);

std::string curve_csv(const BlindDegreeCurve& curve, SweepAxis axis);
/// Inverse of curve_csv. Throws DataError on malformed rows.
BlindDegreeCurve parse_curve_csv(const std::string& text, SweepAxis axis, int class_id, const std::string& class_name,
                                 const std::string& origin = "<memory>");

struct ClassOutcome {
  ClassInfo target;
  std::string status;  // "ok" or "failed"
  std::string error;
  std::size_t curated = 0;
  std::optional<BlindDegreeReport> baseline;
  std::optional<BlindDegreeReport> final_report;
  std::optional<BlindDegreeCurve> epoch_curve;
  std::optional<BlindDegreeCurve> norm_curve;
  std::vector<NormSweepPoint> norm_points;
  std::vector<std::string> diagnostics;
};

struct ExperimentResult {
  std::vector<ClassOutcome> classes;
  std::optional<ResilienceRanking> ranking;  // set when at least one class succeeded
  std::string config_hash;
  std::string detector_digest;
};

using ProgressFn = std::function<void(const std::string& message)>;

/// Runs every class pipeline and writes, under config.output_dir:
///   summary.json, detector.json, ranking.txt, ranking.json
///   classes/<class>/{curation.json, perturbation.json, trace.csv,
///                    sweep_epoch.csv, sweep_norm.csv, report.json}
/// An empty class list writes summary.json only. A class whose pipeline
/// throws is recorded as failed and the rest still run. Output bytes depend
/// only on the config; output_dir itself is not part of the config hash.
ExperimentResult run_experiment(const ExperimentConfig& config, const ProgressFn& progress = {});

/// Recomputes the ranking of a finished run directory from its per-class
/// sweep CSVs and summary.json (successful classes only).
ResilienceRanking rank_run(const std::filesystem::path& run_dir);

/// Dataset and detector as the config describes them (training when no
/// weights path is set).
Dataset experiment_dataset(const ExperimentConfig& config);
DetectorWeights<double> experiment_detector(const ExperimentConfig& config, const Dataset& dataset,
                                            const ProgressFn& progress = {});

}  // namespace udos
