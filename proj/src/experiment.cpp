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

#include "udos/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "udos/curation.hpp"
#include "udos/errors.hpp"
#include "udos/io.hpp"

namespace udos {

using nlohmann::json;

namespace {

template <typename T>
bool strictly_increasing(const std::vector<T>& v) {
  return std::adjacent_find(v.begin(), v.end(), [](const T& a, const T& b) { return !(a < b); }) == v.end();
}

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; })) {
      throw ConfigError(where + ": unknown key '" + it.key() + "'");
    }
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

json report_summary(const BlindDegreeReport& r) {
  return {{"b_img", r.b_img}, {"b_ins", r.b_ins}, {"n", r.n}};
}

std::string class_dir_name(const ClassInfo& c) {
  return io::slug(c.name);
}

}  // namespace

void ExperimentConfig::validate() const {
  if (output_dir.empty()) throw ConfigError("ExperimentConfig: output_dir is required");
  if (!dataset_path) {
    scene.validate();
    if (n_images < 1) throw ConfigError("ExperimentConfig: n_images must be at least 1");
  }
  if (!weights_path && (train.epochs < 1 || train.batch_size < 1 || !(train.learning_rate > 0.0))) {
    throw ConfigError("ExperimentConfig: training needs epochs >= 1, batch_size >= 1, learning_rate > 0");
  }
  attack.validate();
  if (max_imgs < 1) throw ConfigError("ExperimentConfig: max_imgs must be at least 1");
  if (epoch_grid.empty() || !strictly_increasing(epoch_grid) || epoch_grid.front() < 0 ||
      epoch_grid.back() > attack.n_epoch) {
    throw ConfigError("ExperimentConfig: sweep epochs must be non-empty, increasing and within [0, n_epoch]");
  }
  if (xi_grid.empty() || !strictly_increasing(xi_grid) || xi_grid.front() < 0.0 ||
      !std::all_of(xi_grid.begin(), xi_grid.end(), [](double x) { return std::isfinite(x); })) {
    throw ConfigError("ExperimentConfig: xi_grid must be non-empty, increasing, finite and non-negative");
  }
}

ExperimentConfig default_experiment_config() {
  ExperimentConfig c;
  c.scene.seed = c.seed;
  c.train.epochs = 30;
  c.train.seed = c.seed;
  c.attack.n_epoch = 50;
  c.attack.alpha = 600.0;
  c.attack.xi = 10.0;
  c.attack.seed = c.seed;
  for (int e = 0; e <= c.attack.n_epoch; e += 5) c.epoch_grid.push_back(e);
  for (int x = 0; x <= 10; ++x) c.xi_grid.push_back(x);
  return c;
}

ExperimentConfig parse_experiment_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("experiment config: invalid JSON: ") + e.what());
  }
  reject_unknown(doc, {"seed", "output_dir", "dataset", "detector", "classes", "attack", "sweep"}, "config");
  ExperimentConfig c = default_experiment_config();
  read(doc, "seed", c.seed, "config");
  c.scene.seed = c.seed;
  c.train.seed = c.seed;
  c.attack.seed = c.seed;
  if (auto it = doc.find("output_dir"); it != doc.end()) {
    if (!it->is_string()) throw ConfigError("config.output_dir: expected a string");
    c.output_dir = resolve(base_dir, it->get<std::string>());
  }

  if (auto it = doc.find("dataset"); it != doc.end()) {
    reject_unknown(*it, {"synthetic", "path"}, "config.dataset");
    if (it->contains("synthetic") == it->contains("path")) {
      throw ConfigError("config.dataset: give exactly one of 'synthetic' or 'path'");
    }
    if (it->contains("path")) {
      std::string p;
      read(*it, "path", p, "config.dataset");
      c.dataset_path = resolve(base_dir, p);
    } else {
      const json& s = (*it)["synthetic"];
      const std::string w = "config.dataset.synthetic";
      reject_unknown(s,
                     {"n_images", "height", "width", "min_objects", "max_objects", "min_object_size",
                      "max_object_size", "class_frequency", "noise_level", "contrast", "seed"},
                     w);
      read(s, "n_images", c.n_images, w);
      read(s, "height", c.scene.height, w);
      read(s, "width", c.scene.width, w);
      read(s, "min_objects", c.scene.min_objects, w);
      read(s, "max_objects", c.scene.max_objects, w);
      read(s, "min_object_size", c.scene.min_object_size, w);
      read(s, "max_object_size", c.scene.max_object_size, w);
      if (auto f = s.find("class_frequency"); f != s.end()) {
        if (f->is_string() && f->get<std::string>() == "coco") {
          c.scene.class_frequency = coco_class_frequency();
        } else {
          read(s, "class_frequency", c.scene.class_frequency, w);
        }
      }
      read(s, "noise_level", c.scene.noise_level, w);
      read(s, "contrast", c.scene.contrast, w);
      read(s, "seed", c.scene.seed, w);
    }
  }

  if (auto it = doc.find("detector"); it != doc.end()) {
    reject_unknown(*it, {"weights", "train"}, "config.detector");
    if (it->contains("weights") == it->contains("train")) {
      throw ConfigError("config.detector: give exactly one of 'weights' or 'train'");
    }
    if (it->contains("weights")) {
      std::string p;
      read(*it, "weights", p, "config.detector");
      c.weights_path = resolve(base_dir, p);
    } else {
      const json& t = (*it)["train"];
      const std::string w = "config.detector.train";
      reject_unknown(t,
                     {"epochs", "batch_size", "learning_rate", "noobj_weight", "box_weight", "label_smoothing",
                      "seed"},
                     w);
      read(t, "epochs", c.train.epochs, w);
      read(t, "batch_size", c.train.batch_size, w);
      read(t, "learning_rate", c.train.learning_rate, w);
      read(t, "noobj_weight", c.train.noobj_weight, w);
      read(t, "box_weight", c.train.box_weight, w);
      read(t, "label_smoothing", c.train.label_smoothing, w);
      read(t, "seed", c.train.seed, w);
    }
  }

  if (auto it = doc.find("classes"); it != doc.end()) {
    std::vector<std::string> names;
    read(doc, "classes", names, "config");
    c.classes = std::move(names);
  }

  if (auto it = doc.find("attack"); it != doc.end()) {
    const std::string w = "config.attack";
    reject_unknown(*it, {"n_epoch", "alpha", "xi", "inner_steps", "theta", "targeted", "max_imgs"}, w);
    read(*it, "n_epoch", c.attack.n_epoch, w);
    read(*it, "alpha", c.attack.alpha, w);
    read(*it, "xi", c.attack.xi, w);
    read(*it, "inner_steps", c.attack.inner_steps, w);
    read(*it, "theta", c.attack.theta, w);
    read(*it, "targeted", c.targeted, w);
    read(*it, "max_imgs", c.max_imgs, w);
  }

  bool explicit_epochs = false;
  if (auto it = doc.find("sweep"); it != doc.end()) {
    reject_unknown(*it, {"epochs", "xi_grid"}, "config.sweep");
    explicit_epochs = it->contains("epochs");
    read(*it, "epochs", c.epoch_grid, "config.sweep");
    read(*it, "xi_grid", c.xi_grid, "config.sweep");
  }
  if (!explicit_epochs) {
    c.epoch_grid.clear();
    const int stride = std::max(1, c.attack.n_epoch / 10);
    for (int e = 0; e < c.attack.n_epoch; e += stride) c.epoch_grid.push_back(e);
    c.epoch_grid.push_back(c.attack.n_epoch);
  }
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return parse_experiment_config(io::read_file(path), path.parent_path());
}

std::string experiment_config_json(const ExperimentConfig& c) {
  json doc;
  doc["seed"] = c.seed;
  if (c.dataset_path) {
    doc["dataset"] = {{"path", c.dataset_path->generic_string()}};
  } else {
    doc["dataset"] = {{"synthetic",
                       {{"n_images", c.n_images},
                        {"height", c.scene.height},
                        {"width", c.scene.width},
                        {"min_objects", c.scene.min_objects},
                        {"max_objects", c.scene.max_objects},
                        {"min_object_size", c.scene.min_object_size},
                        {"max_object_size", c.scene.max_object_size},
                        {"class_frequency", c.scene.class_frequency},
                        {"noise_level", c.scene.noise_level},
                        {"contrast", c.scene.contrast},
                        {"seed", c.scene.seed}}}};
  }
  if (c.weights_path) {
    doc["detector"] = {{"weights", c.weights_path->generic_string()}};
  } else {
    doc["detector"] = {{"train",
                        {{"epochs", c.train.epochs},
                         {"batch_size", c.train.batch_size},
                         {"learning_rate", c.train.learning_rate},
                         {"noobj_weight", c.train.noobj_weight},
                         {"box_weight", c.train.box_weight},
                         {"label_smoothing", c.train.label_smoothing},
                         {"seed", c.train.seed}}}};
  }
  doc["classes"] = c.classes ? json(*c.classes) : json(nullptr);
  doc["attack"] = {{"n_epoch", c.attack.n_epoch},     {"alpha", c.attack.alpha},     {"xi", c.attack.xi},
                   {"inner_steps", c.attack.inner_steps}, {"theta", c.attack.theta}, {"targeted", c.targeted},
                   {"max_imgs", c.max_imgs}};
  doc["sweep"] = {{"epochs", c.epoch_grid}, {"xi_grid", c.xi_grid}};
  return doc.dump(1);
}

BlindDegreeCurve epoch_sweep(const AttackTrace& trace, const BlindDegreeReport& baseline,
                             const std::vector<int>& epochs, int class_id, const std::string& class_name) {
  BlindDegreeCurve curve{class_id, class_name, {}};
  for (int e : epochs) {
    if (e == 0) {
      curve.samples.push_back(CurveSample{0, 0.0, baseline.b_img, baseline.b_ins});
      continue;
    }
    if (e < 0 || static_cast<std::size_t>(e) > trace.records.size()) {
      throw ConfigError("epoch_sweep: checkpoint " + std::to_string(e) + " is outside the trace");
    }
    const TraceRecord& r = trace.records[static_cast<std::size_t>(e) - 1];
    curve.samples.push_back(CurveSample{r.epoch, r.linf_norm, r.b_img, r.b_ins});
  }
  return curve;
}

BlindDegreeCurve norm_sweep(const AttackTrace& trace, const BlindDegreeReport& baseline,
                            const std::vector<double>& xi_grid, int class_id, const std::string& class_name,
                            std::vector<NormSweepPoint>* points) {
  BlindDegreeCurve curve{class_id, class_name, {}};
  if (points) points->clear();
  for (double xi : xi_grid) {
    const TraceRecord* chosen = nullptr;
    for (const auto& r : trace.records) {
      if (r.linf_norm <= xi) chosen = &r;
    }
    if (chosen) {
      curve.samples.push_back(CurveSample{chosen->epoch, xi, chosen->b_img, chosen->b_ins});
      if (points) points->push_back(NormSweepPoint{xi, chosen->epoch, "snapshot"});
    } else {
      curve.samples.push_back(CurveSample{0, xi, baseline.b_img, baseline.b_ins});
      if (points) points->push_back(NormSweepPoint{xi, 0, "baseline"});
    }
  }
  return curve;
}

std::string curve_csv(const BlindDegreeCurve& curve, SweepAxis axis) {
  std::ostringstream out;
  if (axis == SweepAxis::kEpoch) {
    out << "epoch,linf_norm,b_img,b_ins\n";
    for (const auto& s : curve.samples) {
      out << s.epoch << ',' << io::format_double(s.norm) << ',' << io::format_double(s.b_img) << ','
          << io::format_double(s.b_ins) << '\n';
    }
  } else {
    out << "xi,snapshot_epoch,b_img,b_ins\n";
    for (const auto& s : curve.samples) {
      out << io::format_double(s.norm) << ',' << s.epoch << ',' << io::format_double(s.b_img) << ','
          << io::format_double(s.b_ins) << '\n';
    }
  }
  return out.str();
}

BlindDegreeCurve parse_curve_csv(const std::string& text, SweepAxis axis, int class_id, const std::string& class_name,
                                 const std::string& origin) {
  BlindDegreeCurve curve{class_id, class_name, {}};
  std::istringstream in(text);
  std::string line;
  const std::string header = axis == SweepAxis::kEpoch ? "epoch,linf_norm,b_img,b_ins" : "xi,snapshot_epoch,b_img,b_ins";
  if (!std::getline(in, line) || line != header) {
    throw DataError(origin + ": expected header '" + header + "'");
  }
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    if (fields.size() != 4) throw DataError(origin + ": line " + std::to_string(row) + ": expected 4 fields");
    try {
      std::size_t used = 0;
      auto num = [&](const std::string& f) {
        const double v = std::stod(f, &used);
        if (used != f.size()) throw std::invalid_argument(f);
        return v;
      };
      CurveSample s;
      if (axis == SweepAxis::kEpoch) {
        s.epoch = static_cast<int>(num(fields[0]));
        s.norm = num(fields[1]);
      } else {
        s.norm = num(fields[0]);
        s.epoch = static_cast<int>(num(fields[1]));
      }
      s.b_img = num(fields[2]);
      s.b_ins = num(fields[3]);
      curve.samples.push_back(s);
    } catch (const std::logic_error&) {
      throw DataError(origin + ": line " + std::to_string(row) + ": bad number");
    }
  }
  if (curve.samples.empty()) throw DataError(origin + ": no samples");
  return curve;
}

ResilienceRanking rank_run(const std::filesystem::path& run_dir) {
  const std::filesystem::path summary_path = run_dir / "summary.json";
  json summary;
  try {
    summary = json::parse(io::read_file(summary_path));
  } catch (const json::exception& e) {
    throw DataError(summary_path.string() + ": " + e.what());
  }
  std::vector<BlindDegreeCurve> epoch_curves;
  std::vector<BlindDegreeCurve> norm_curves;
  try {
    for (const auto& c : summary.at("classes")) {
      if (c.at("status").get<std::string>() != "ok") continue;
      const int id = c.at("class_id").get<int>();
      const std::string name = c.at("class_name").get<std::string>();
      const std::filesystem::path dir = run_dir / "classes" / io::slug(name);
      const auto epoch_path = dir / "sweep_epoch.csv";
      const auto norm_path = dir / "sweep_norm.csv";
      epoch_curves.push_back(parse_curve_csv(io::read_file(epoch_path), SweepAxis::kEpoch, id, name, epoch_path.string()));
      norm_curves.push_back(parse_curve_csv(io::read_file(norm_path), SweepAxis::kNorm, id, name, norm_path.string()));
    }
  } catch (const json::exception& e) {
    throw DataError(summary_path.string() + ": " + e.what());
  }
  if (epoch_curves.empty()) throw DataError(run_dir.string() + ": no successful class to rank");
  return rank_all(epoch_curves, norm_curves);
}

Dataset experiment_dataset(const ExperimentConfig& config) {
  if (config.dataset_path) return load_dataset(*config.dataset_path);
  return generate_dataset(config.scene, config.n_images);
}

DetectorWeights<double> experiment_detector(const ExperimentConfig& config, const Dataset& dataset,
                                            const ProgressFn& progress) {
  if (config.weights_path) return load_weights(*config.weights_path);
  TrainOptions options = config.train;
  if (progress) {
    options.on_epoch = [&](int epoch, double loss) {
      progress("train epoch " + std::to_string(epoch + 1) + "/" + std::to_string(options.epochs) + " loss " +
               io::format_double(loss));
    };
  }
  return train<double>(dataset, default_architecture(static_cast<int>(dataset.classes.size())), options);
}

namespace {

void run_class(const std::shared_ptr<const Dataset>& dataset, const DetectorWeights<double>& weights,
               const std::string& digest, const ExperimentConfig& config, const ClassInfo& target,
               const std::filesystem::path& dir, const ProgressFn& progress, ClassOutcome& out) {
  const double theta = config.attack.theta;
  CuratedDataset curated = curate(dataset, weights, target.id, theta, config.max_imgs);
  out.curated = curated.size();
  io::write_file_atomic(dir / "curation.json", curation_manifest(curated, digest));
  if (curated.empty()) {
    throw DataError("no image qualifies for class '" + target.name + "' at theta " + io::format_double(theta));
  }
  const PerturbationD zero = PerturbationD::zeros_like(curated.image(0), config.attack.xi);
  out.baseline = evaluate_blind_degree(curated, weights, zero, theta);

  AttackConfig attack = config.attack;
  attack.target_class = config.targeted ? std::optional<int>(target.id) : std::nullopt;
  AttackResult result = synthesize_universal(curated, weights, attack, [&](const TraceRecord& r) {
    if (progress) {
      progress(target.name + " epoch " + std::to_string(r.epoch) + " linf " + io::format_double(r.linf_norm) +
               " b_img " + io::format_double(r.b_img) + " b_ins " + io::format_double(r.b_ins));
    }
  });
  out.diagnostics = result.diagnostics;
  out.final_report = evaluate_blind_degree(curated, weights, result.v, theta);
  out.final_report->v_linf = compute_norm(result.v, NormKind::kLinf);
  out.epoch_curve = epoch_sweep(result.trace, *out.baseline, config.epoch_grid, target.id, target.name);
  out.norm_curve = norm_sweep(result.trace, *out.baseline, config.xi_grid, target.id, target.name, &out.norm_points);

  save_perturbation(result.v, dir / "perturbation.json");
  io::write_file_atomic(dir / "trace.csv", trace_csv(result.trace));
  io::write_file_atomic(dir / "sweep_epoch.csv", curve_csv(*out.epoch_curve, SweepAxis::kEpoch));
  io::write_file_atomic(dir / "sweep_norm.csv", curve_csv(*out.norm_curve, SweepAxis::kNorm));
  io::write_file_atomic(dir / "report.json", report_json(*out.final_report));
  out.status = "ok";
}

json outcome_json(const ClassOutcome& o, const ExperimentConfig& config) {
  json j = {{"class_id", o.target.id},
            {"class_name", o.target.name},
            {"category_id", o.target.category_id},
            {"status", o.status},
            {"curated", o.curated},
            {"diagnostics", o.diagnostics}};
  if (!o.error.empty()) j["error"] = o.error;
  j["baseline"] = o.baseline ? report_summary(*o.baseline) : json(nullptr);
  if (o.final_report) {
    j["final"] = report_summary(*o.final_report);
    j["final"]["v_linf"] = *o.final_report->v_linf;
  } else {
    j["final"] = nullptr;
  }
  json epochs = json::array();
  for (int e : config.epoch_grid) {
    epochs.push_back({{"epoch", e}, {"status", o.status == "ok" ? (e == 0 ? "baseline" : "snapshot") : "failed"}});
  }
  json norms = json::array();
  if (o.status == "ok") {
    for (const auto& p : o.norm_points) {
      norms.push_back({{"xi", p.xi}, {"snapshot_epoch", p.epoch}, {"status", p.status}});
    }
  } else {
    for (double xi : config.xi_grid) norms.push_back({{"xi", xi}, {"status", "failed"}});
  }
  j["sweep"] = {{"epoch", epochs}, {"norm", norms}};
  return j;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, const ProgressFn& progress) {
  config.validate();
  const std::string config_text = experiment_config_json(config);
  ExperimentResult result;
  result.config_hash = io::fnv1a_hex(config_text);
  std::filesystem::create_directories(config.output_dir);

  json summary = {{"format", "udos-run-summary"},
                  {"version", 1},
                  {"config_hash", result.config_hash},
                  {"seed", config.seed},
                  {"config", json::parse(config_text)},
                  {"norm_sweep_method",
                   "single run at the full xi budget; each grid value takes the last epoch snapshot with "
                   "linf_norm <= xi, or the clean baseline when none qualifies"}};

  if (config.classes && config.classes->empty()) {
    summary["classes"] = json::array();
    summary["ranking"] = nullptr;
    io::write_file_atomic(config.output_dir / "summary.json", summary.dump(1) + "\n");
    return result;
  }

  auto dataset = std::make_shared<const Dataset>(experiment_dataset(config));
  if (dataset->empty()) throw DataError("experiment dataset is empty");
  std::vector<ClassInfo> targets;
  if (config.classes) {
    for (const auto& name : *config.classes) {
      const auto id = find_class(dataset->classes, name);
      if (!id) throw ConfigError("experiment config: unknown class '" + name + "'");
      targets.push_back(dataset->classes[static_cast<std::size_t>(*id)]);
    }
  } else {
    targets = dataset->classes;
  }

  const DetectorWeights<double> weights = experiment_detector(config, *dataset, progress);
  result.detector_digest = weights_digest(weights);
  save_weights(weights, config.output_dir / "detector.json");
  summary["detector_digest"] = result.detector_digest;
  summary["dataset"] = {{"images", dataset->size()}, {"classes", dataset->classes.size()}};

  std::vector<BlindDegreeCurve> epoch_curves;
  std::vector<BlindDegreeCurve> norm_curves;
  json classes = json::array();
  for (const auto& target : targets) {
    const std::filesystem::path dir = config.output_dir / "classes" / class_dir_name(target);
    std::filesystem::create_directories(dir);
    ClassOutcome outcome;
    outcome.target = target;
    try {
      run_class(dataset, weights, result.detector_digest, config, target, dir, progress, outcome);
      epoch_curves.push_back(*outcome.epoch_curve);
      norm_curves.push_back(*outcome.norm_curve);
    } catch (const std::exception& e) {
      outcome.final_report.reset();
      outcome.epoch_curve.reset();
      outcome.norm_curve.reset();
      outcome.norm_points.clear();
      outcome.status = "failed";
      outcome.error = e.what();
      if (progress) progress(target.name + " failed: " + outcome.error);
    }
    classes.push_back(outcome_json(outcome, config));
    result.classes.push_back(std::move(outcome));
  }
  summary["classes"] = classes;

  if (!epoch_curves.empty()) {
    result.ranking = rank_all(epoch_curves, norm_curves);
    io::write_file_atomic(config.output_dir / "ranking.txt", render_ranking_table(*result.ranking));
    io::write_file_atomic(config.output_dir / "ranking.json", ranking_json(*result.ranking));
    summary["ranking"] = json::parse(ranking_json(*result.ranking));
  } else {
    summary["ranking"] = nullptr;
  }
  io::write_file_atomic(config.output_dir / "summary.json", summary.dump(1) + "\n");
  return result;
}

}  // namespace udos
