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
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "udos/attack.hpp"
#include "udos/coco.hpp"
#include "udos/curation.hpp"
#include "udos/dataset.hpp"
#include "udos/detector.hpp"
#include "udos/errors.hpp"
#include "udos/experiment.hpp"
#include "udos/external.hpp"
#include "udos/io.hpp"
#include "udos/metrics.hpp"
#include "udos/scenegen.hpp"

namespace fs = std::filesystem;
using namespace udos;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

void note(const std::string& message) { std::cerr << message << '\n'; }

void emit(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::cout << text;
  } else {
    io::write_file_atomic(out, text);
  }
}

ClassInfo resolve_class(const Dataset& dataset, const std::string& name) {
  const auto id = find_class(dataset.classes, name);
  if (!id) throw ConfigError("unknown class '" + name + "'");
  return dataset.classes[static_cast<std::size_t>(*id)];
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Universal perturbation attacks against a grid object detector and blind-degree evaluation"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Progress messages on stderr");

  // generate
  auto* gen = app.add_subcommand("generate", "Write a synthetic scene dataset");
  SceneSpec spec;
  std::int64_t n_images = 400;
  std::string gen_out;
  bool coco_frequency = false;
  gen->add_option("-o,--out", gen_out, "Output directory")->required();
  gen->add_option("-n,--images", n_images, "Number of scenes")->capture_default_str();
  gen->add_option("--seed", spec.seed, "Scene seed")->capture_default_str();
  gen->add_option("--height", spec.height)->capture_default_str();
  gen->add_option("--width", spec.width)->capture_default_str();
  gen->add_option("--min-objects", spec.min_objects)->capture_default_str();
  gen->add_option("--max-objects", spec.max_objects)->capture_default_str();
  gen->add_option("--min-size", spec.min_object_size)->capture_default_str();
  gen->add_option("--max-size", spec.max_object_size)->capture_default_str();
  gen->add_option("--noise", spec.noise_level)->capture_default_str();
  gen->add_option("--contrast", spec.contrast)->capture_default_str();
  gen->add_flag("--coco-frequency", coco_frequency, "Class frequencies proportional to COCO train image counts");

  // train
  auto* trn = app.add_subcommand("train", "Train the grid detector");
  std::string data_dir;
  std::string weights_out;
  TrainOptions topt;
  topt.epochs = 30;
  trn->add_option("-d,--data", data_dir, "Dataset directory or annotation file")->required();
  trn->add_option("-o,--out", weights_out, "Checkpoint path")->required();
  trn->add_option("--epochs", topt.epochs)->capture_default_str();
  trn->add_option("--batch-size", topt.batch_size)->capture_default_str();
  trn->add_option("--lr", topt.learning_rate)->capture_default_str();
  trn->add_option("--label-smoothing", topt.label_smoothing)->capture_default_str();
  trn->add_option("--seed", topt.seed)->capture_default_str();

  // shared by curate / attack / evaluate
  std::string weights_path;
  std::string class_name;
  double theta = 0.7;
  std::size_t max_imgs = 100;
  std::string out_path;

  auto* cur = app.add_subcommand("curate", "Select images the clean detector already finds the class in");
  cur->add_option("-d,--data", data_dir)->required();
  cur->add_option("-w,--weights", weights_path)->required();
  cur->add_option("-c,--class", class_name)->required();
  cur->add_option("--theta", theta)->capture_default_str();
  cur->add_option("--max-imgs", max_imgs)->capture_default_str();
  cur->add_option("-o,--out", out_path, "Manifest path (stdout when omitted)");

  auto* atk = app.add_subcommand("attack", "Synthesize a universal perturbation for one class");
  AttackConfig acfg;
  acfg.n_epoch = 50;
  acfg.alpha = 600.0;
  bool untargeted = false;
  atk->add_option("-d,--data", data_dir)->required();
  atk->add_option("-w,--weights", weights_path)->required();
  atk->add_option("-c,--class", class_name)->required();
  atk->add_option("-o,--out", out_path, "Output directory")->required();
  atk->add_option("--epochs", acfg.n_epoch)->capture_default_str();
  atk->add_option("--alpha", acfg.alpha)->capture_default_str();
  atk->add_option("--xi", acfg.xi)->capture_default_str();
  atk->add_option("--inner-steps", acfg.inner_steps)->capture_default_str();
  atk->add_option("--theta", acfg.theta)->capture_default_str();
  atk->add_option("--max-imgs", max_imgs)->capture_default_str();
  atk->add_option("--seed", acfg.seed)->capture_default_str();
  atk->add_flag("--untargeted", untargeted, "Suppress every class, not just the attacked one");

  auto* ev = app.add_subcommand("evaluate", "Blind degrees of a perturbation, or of external detection dumps");
  std::string perturbation_path;
  std::string annotations_path;
  std::string dump_path;
  std::string clean_dump_path;
  ev->add_option("-d,--data", data_dir);
  ev->add_option("-w,--weights", weights_path);
  ev->add_option("-p,--perturbation", perturbation_path, "Perturbation artifact (zero when omitted)");
  ev->add_option("-c,--class", class_name, "Class or category name")->required();
  ev->add_option("--theta", theta)->capture_default_str();
  ev->add_option("--max-imgs", max_imgs)->capture_default_str();
  ev->add_option("--annotations", annotations_path, "COCO annotation file (external mode)");
  ev->add_option("--dump", dump_path, "Detections on perturbed images (external mode)");
  ev->add_option("--clean-dump", clean_dump_path, "Detections on clean images (external mode)");
  ev->add_option("-o,--out", out_path, "Report path (stdout when omitted)");

  auto* cnt = app.add_subcommand("count", "Distinct images per category in a COCO annotation file");
  std::vector<std::string> categories;
  bool as_json = false;
  cnt->add_option("annotations", annotations_path)->required();
  cnt->add_option("--categories", categories, "Category names (default: vehicle-scene set)")->delimiter(',');
  cnt->add_flag("--json", as_json);

  auto* run = app.add_subcommand("run", "Full experiment from a config file");
  std::string config_path;
  std::string output_override;
  std::optional<std::uint64_t> seed_override;
  std::vector<std::string> class_override;
  std::optional<int> epoch_override;
  std::optional<double> alpha_override;
  std::optional<double> xi_override;
  run->add_option("config", config_path, "Experiment config (JSON); toy defaults when omitted");
  run->add_option("-o,--output-dir", output_override);
  run->add_option("--seed", seed_override);
  run->add_option("--classes", class_override)->delimiter(',');
  run->add_option("--epochs", epoch_override);
  run->add_option("--alpha", alpha_override);
  run->add_option("--xi", xi_override);

  auto* rnk = app.add_subcommand("rank", "Resilience ranking of a finished run");
  std::string run_dir;
  rnk->add_option("run_dir", run_dir)->required();
  rnk->add_flag("--json", as_json);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  const ProgressFn progress = verbose ? ProgressFn(note) : ProgressFn();
  try {
    if (*gen) {
      if (coco_frequency) spec.class_frequency = coco_class_frequency();
      if (n_images < 1) throw ConfigError("--images must be at least 1");
      save_dataset(generate_dataset(spec, n_images), gen_out);
    } else if (*trn) {
      const Dataset dataset = load_dataset(data_dir);
      if (verbose) {
        topt.on_epoch = [&](int e, double loss) {
          note("epoch " + std::to_string(e + 1) + " loss " + io::format_double(loss));
        };
      }
      const auto weights =
          train<double>(dataset, default_architecture(static_cast<int>(dataset.classes.size())), topt);
      save_weights(weights, weights_out);
      std::cout << weights_digest(weights) << '\n';
    } else if (*cur) {
      auto dataset = std::make_shared<const Dataset>(load_dataset(data_dir));
      const auto weights = load_weights(weights_path);
      const ClassInfo target = resolve_class(*dataset, class_name);
      const CuratedDataset curated = curate(dataset, weights, target.id, theta, max_imgs);
      emit(curation_manifest(curated, weights_digest(weights)), out_path);
    } else if (*atk) {
      auto dataset = std::make_shared<const Dataset>(load_dataset(data_dir));
      const auto weights = load_weights(weights_path);
      const ClassInfo target = resolve_class(*dataset, class_name);
      const CuratedDataset curated = curate(dataset, weights, target.id, acfg.theta, max_imgs);
      const fs::path dir = out_path;
      fs::create_directories(dir);
      io::write_file_atomic(dir / "curation.json", curation_manifest(curated, weights_digest(weights)));
      if (curated.empty()) throw DataError("no image qualifies for class '" + target.name + "'");
      if (!untargeted) acfg.target_class = target.id;
      const AttackResult result = synthesize_universal(curated, weights, acfg, [&](const TraceRecord& r) {
        if (verbose) {
          note("epoch " + std::to_string(r.epoch) + " linf " + io::format_double(r.linf_norm) + " b_img " +
              io::format_double(r.b_img) + " b_ins " + io::format_double(r.b_ins));
        }
      });
      for (const auto& d : result.diagnostics) note("warning: " + d);
      save_perturbation(result.v, dir / "perturbation.json");
      io::write_file_atomic(dir / "trace.csv", trace_csv(result.trace));
      BlindDegreeReport report = evaluate_blind_degree(curated, weights, result.v, acfg.theta);
      report.v_linf = compute_norm(result.v, NormKind::kLinf);
      io::write_file_atomic(dir / "report.json", report_json(report));
      std::cout << report_json(report);
    } else if (*ev) {
      const bool external = !annotations_path.empty() || !dump_path.empty() || !clean_dump_path.empty();
      if (external) {
        if (annotations_path.empty() || dump_path.empty() || clean_dump_path.empty()) {
          throw ConfigError("external evaluation needs --annotations, --dump and --clean-dump");
        }
        const AnnotationSet annset = load_annotations(annotations_path);
        const auto dump = load_detection_dump(dump_path, annset);
        const auto clean = load_detection_dump(clean_dump_path, annset);
        const ExternalEvaluation result = evaluate_external(annset, dump, clean, class_name, theta);
        nlohmann::json doc = {{"clean", nlohmann::json::parse(report_json(result.clean))},
                              {"attacked", nlohmann::json::parse(report_json(result.attacked))},
                              {"curated_ids", result.curated_ids}};
        emit(doc.dump(1) + "\n", out_path);
      } else {
        if (data_dir.empty() || weights_path.empty()) {
          throw ConfigError("evaluate needs --data and --weights (or the external-mode options)");
        }
        auto dataset = std::make_shared<const Dataset>(load_dataset(data_dir));
        const auto weights = load_weights(weights_path);
        const ClassInfo target = resolve_class(*dataset, class_name);
        const CuratedDataset curated = curate(dataset, weights, target.id, theta, max_imgs);
        if (curated.empty()) throw DataError("no image qualifies for class '" + target.name + "'");
        const PerturbationD v = perturbation_path.empty() ? PerturbationD::zeros_like(curated.image(0), 0.0)
                                                          : load_perturbation(perturbation_path);
        BlindDegreeReport report = evaluate_blind_degree(curated, weights, v, theta);
        report.v_linf = compute_norm(v, NormKind::kLinf);
        emit(report_json(report), out_path);
      }
    } else if (*cnt) {
      const AnnotationSet annset = load_annotations(annotations_path);
      const auto counts = count_category_images(annset, categories.empty() ? vehicle_scene_categories() : categories);
      if (as_json) {
        nlohmann::json doc = nlohmann::json::object();
        for (const auto& [name, n] : counts) doc[name] = n;
        std::cout << doc.dump(1) << '\n';
      } else {
        for (const auto& [name, n] : counts) std::cout << name << '\t' << n << '\n';
      }
    } else if (*run) {
      ExperimentConfig config = config_path.empty() ? default_experiment_config() : load_experiment_config(config_path);
      if (!output_override.empty()) config.output_dir = output_override;
      if (config.output_dir.empty()) config.output_dir = "run";
      if (seed_override) {
        config.seed = config.scene.seed = config.train.seed = config.attack.seed = *seed_override;
      }
      if (!class_override.empty()) config.classes = class_override;
      if (epoch_override) {
        config.attack.n_epoch = *epoch_override;
        std::erase_if(config.epoch_grid, [&](int e) { return e > *epoch_override; });
        if (config.epoch_grid.empty() || config.epoch_grid.back() != *epoch_override) {
          config.epoch_grid.push_back(*epoch_override);
        }
      }
      if (alpha_override) config.attack.alpha = *alpha_override;
      if (xi_override) config.attack.xi = *xi_override;
      const ExperimentResult result = run_experiment(config, progress);
      if (result.ranking) std::cout << render_ranking_table(*result.ranking);
      int failed = 0;
      for (const auto& c : result.classes) {
        if (c.status != "ok") {
          ++failed;
          note("class " + c.target.name + " failed: " + c.error);
        }
      }
      if (failed > 0 && failed == static_cast<int>(result.classes.size())) return kData;
    } else if (*rnk) {
      const ResilienceRanking ranking = rank_run(run_dir);
      std::cout << (as_json ? ranking_json(ranking) : render_ranking_table(ranking));
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  }
  return kOk;
}
