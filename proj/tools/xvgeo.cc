// Copyright 2026 The xvgeo Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line driver: synth, augment, train, embed, eval, gradcheck.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "xvgeo/augment.h"
#include "xvgeo/model.h"
#include "xvgeo/reconstruction.h"
#include "xvgeo/retrieval.h"
#include "xvgeo/synthdata.h"
#include "xvgeo/train.h"

namespace fs = std::filesystem;

namespace xvgeo {
namespace {

struct GlobalOptions {
  std::string out = ".";
  uint64_t seed = 0;
};

struct ModelOptions {
  ModelConfig config;
  int input_size = 64;
  bool rgb_only = false;

  ModelConfig Resolve(uint64_t seed) const {
    ModelConfig c = config;
    c.input_height = c.input_width = input_size;
    c.use_normals = !rgb_only;
    c.seed = seed;
    return c;
  }
};

void AddModelOptions(CLI::App* cmd, ModelOptions* m) {
  cmd->add_option("--channels", m->config.stage_channels,
                  "Channels of the four backbone stages")
      ->expected(4)
      ->capture_default_str();
  cmd->add_option("--input-size", m->input_size, "Square network input, pixels")
      ->capture_default_str();
  cmd->add_option("--agg-dim", m->config.aggregation_dim,
                  "Spatial aggregation rows d")
      ->capture_default_str();
  cmd->add_option("--vector-dim", m->config.vector_dim,
                  "Classifier hidden vector size")
      ->capture_default_str();
  cmd->add_flag("--rgb-only", m->rgb_only,
                "Disable the normal branch, fusion and interaction");
}

// Global options plus the active subcommand's section, so that the file can
// be fed back through --config without tripping other subcommands' checks.
void WriteEffectiveConfig(const CLI::App& app, const CLI::App& active,
                          const fs::path& dir) {
  std::istringstream all(app.config_to_str(true, true));
  std::string out;
  std::string pending;
  std::string line;
  const std::string own = active.get_name() + ".";
  while (std::getline(all, line)) {
    if (line.empty() || line[0] == '#') {
      pending += line + "\n";
      continue;
    }
    const auto eq = line.find('=');
    const auto dot = line.find('.');
    const bool global = dot == std::string::npos || dot > eq;
    if (global || line.starts_with(own)) out += pending + line + "\n";
    pending.clear();
  }
  fs::create_directories(dir);
  std::ofstream file(dir / "config.toml");
  file << out;
  if (!file) throw std::runtime_error("cannot write " + (dir / "config.toml").string());
}

nlohmann::json ModelToJson(const ModelConfig& c) {
  return {{"stage_channels", c.stage_channels},
          {"input_height", c.input_height},
          {"input_width", c.input_width},
          {"aggregation_dim", c.aggregation_dim},
          {"num_classes", c.num_classes},
          {"vector_dim", c.vector_dim},
          {"seed", c.seed},
          {"use_normals", c.use_normals}};
}

ModelConfig ModelFromJson(const nlohmann::json& j) {
  ModelConfig c;
  c.stage_channels = j.at("stage_channels").get<std::vector<int>>();
  c.input_height = j.at("input_height");
  c.input_width = j.at("input_width");
  c.aggregation_dim = j.at("aggregation_dim");
  c.num_classes = j.at("num_classes");
  c.vector_dim = j.at("vector_dim");
  c.seed = j.at("seed");
  c.use_normals = j.at("use_normals");
  c.Validate();
  return c;
}

int RunSynth(const GlobalOptions& g, SceneSpec spec) {
  spec.seed = g.seed;
  GenerateDataset(spec, g.out);
  std::printf("wrote %d classes to %s\n", spec.num_classes, g.out.c_str());
  return 0;
}

struct AugmentArgs {
  std::string recon;
  std::string sat;
  std::string images;
  AugmentOptions options;
};

int RunAugment(const GlobalOptions& g, AugmentArgs a) {
  a.options.seed = g.seed;
  const Reconstruction recon = ParseReconstruction(a.recon);
  const SatAnnotation annotation = ReadSatAnnotation(a.sat);
  const AugmentResult result = GenerateInstances(recon, annotation, a.options);
  const fs::path images = a.images.empty() ? fs::path(a.recon) / "images" : fs::path(a.images);
  WriteCrops(result, images, annotation, g.out);
  WriteCropMetadata(fs::path(g.out) / "crops.csv", result);
  for (const std::string& w : result.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  std::printf("%zu centers, %zu crops, radius %.6g\n", result.selected.size(),
              result.crops.size(), result.radius);
  return 0;
}

struct TrainArgs {
  std::string data;
  ModelOptions model;
  TrainOptions train;
  int log_every = 100;
};

int RunTrain(const GlobalOptions& g, TrainArgs a) {
  a.train.seed = g.seed;
  ModelConfig config = a.model.Resolve(g.seed);
  const std::vector<Sample> samples =
      LoadSplit(a.data, "train", config.input_height, config.input_width);
  config.num_classes = BatchSampler(samples, 2, 1, 0).num_classes();
  DualBranchModel model(config);

  const fs::path out(g.out);
  std::ofstream log(out / "loss_log.csv");
  if (!log) throw std::runtime_error("cannot write " + (out / "loss_log.csv").string());
  log << "step,triplet,cross_entropy,total\n";
  char line[128];
  Train(model, samples, a.train, [&](const StepLog& s) {
    std::snprintf(line, sizeof(line), "%d,%.17g,%.17g,%.17g\n", s.step,
                  s.triplet, s.cross_entropy, s.total);
    log << line;
    if (a.log_every > 0 && s.step % a.log_every == 0) {
      std::fprintf(stderr, "step %d  triplet %.4f  ce %.4f  total %.4f\n",
                   s.step, s.triplet, s.cross_entropy, s.total);
    }
  });
  SaveCheckpoint((out / "model.bin").string(), model.parameters());
  std::ofstream(out / "model.json") << ModelToJson(config).dump(2) << "\n";
  std::printf("trained %d steps on %zu samples, checkpoint %s\n", a.train.steps,
              samples.size(), (out / "model.bin").c_str());
  return 0;
}

struct EmbedArgs {
  std::string run;
  std::string data;
  std::string split = "query";
  int batch = 32;
};

int RunEmbed(const GlobalOptions& g, const EmbedArgs& a) {
  std::ifstream meta(fs::path(a.run) / "model.json");
  if (!meta) throw std::runtime_error("missing model.json in " + a.run);
  const ModelConfig config = ModelFromJson(nlohmann::json::parse(meta));
  DualBranchModel model(config);
  LoadCheckpoint((fs::path(a.run) / "model.bin").string(), model.parameters());
  const std::vector<Sample> samples =
      LoadSplit(a.data, a.split, config.input_height, config.input_width);
  const std::vector<Descriptor> descriptors = EmbedSamples(model, samples, a.batch);
  const fs::path path = fs::path(g.out) / (a.split + ".jrng");
  WriteDescriptors(path, descriptors);
  std::printf("wrote %zu descriptors of dim %d to %s\n", descriptors.size(),
              config.descriptor_dim(), path.c_str());
  return 0;
}

struct EvalArgs {
  std::string query;
  std::string gallery;
};

int RunEval(const GlobalOptions& g, const EvalArgs& a) {
  std::vector<Descriptor> drone;
  std::vector<Descriptor> satellite;
  for (const std::string& path : {a.query, a.gallery}) {
    for (Descriptor& d : ReadDescriptors(path)) {
      (d.view == View::kDrone ? drone : satellite).push_back(std::move(d));
    }
  }
  if (drone.empty() || satellite.empty()) {
    throw std::runtime_error("evaluation needs both drone and satellite descriptors");
  }
  const CrossViewMetrics m = EvaluateCrossView(drone, satellite);
  const std::vector<TaskMetrics> tasks = {m.drone_to_satellite, m.satellite_to_drone};
  const std::string table = FormatMetricsTable(tasks);
  std::fputs(table.c_str(), stdout);
  std::ofstream(fs::path(g.out) / "metrics.txt") << table;
  WriteMetricsCsv(fs::path(g.out) / "metrics.csv", tasks);
  return 0;
}

struct GradcheckArgs {
  ModelOptions model;
  int classes = 2;
  int entries = 12;
  double tolerance = 1e-4;
};

int RunGradcheck(const GlobalOptions& g, GradcheckArgs a) {
  ModelConfig config = a.model.Resolve(g.seed);
  config.num_classes = a.classes;
  DualBranchModel model(config);
  const GradCheckReport report = CheckModelGradients(model, a.entries, g.seed);
  std::ofstream out(fs::path(g.out) / "gradcheck.csv");
  out << "parameter,entries,max_rel_error\n";
  bool ok = true;
  for (const ParameterGradError& p : report.per_parameter) {
    const bool pass = p.max_rel_error <= a.tolerance;
    ok = ok && pass;
    std::printf("%-24s %4zu  %.3e%s\n", p.name.c_str(), p.entries_checked,
                p.max_rel_error, pass ? "" : "  FAIL");
    char line[160];
    std::snprintf(line, sizeof(line), "%s,%zu,%.6e\n", p.name.c_str(),
                  p.entries_checked, p.max_rel_error);
    out << line;
  }
  std::printf("max relative error %.3e (tolerance %.1e)\n", report.max_rel_error,
              a.tolerance);
  return ok ? 0 : 1;
}

int Main(int argc, char** argv) {
  CLI::App app{"Cross-view geo-localization toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML configuration file");
  GlobalOptions g;
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--seed", g.seed, "Seed for every random choice")->capture_default_str();

  SceneSpec spec;
  CLI::App* synth = app.add_subcommand("synth", "Generate the synthetic dataset");
  synth->add_option("--classes", spec.num_classes, "Locations (classes)")->capture_default_str();
  synth->add_option("--image-size", spec.image_size, "Side of every rendered image, pixels")->capture_default_str();
  synth->add_option("--train-views", spec.train_drone_views, "Drone views per class in train")->capture_default_str();
  synth->add_option("--query-views", spec.query_drone_views, "Held-out drone views per class")->capture_default_str();
  synth->add_option("--bumps", spec.bumps, "Gaussian bumps per heightfield")->capture_default_str();
  synth->add_option("--bump-height", spec.bump_height, "Peak bump height")->capture_default_str();
  synth->add_option("--waves", spec.texture_waves, "Sinusoids in the albedo texture")->capture_default_str();
  synth->add_option("--warp", spec.warp, "Drone corner jitter")->capture_default_str();
  synth->add_option("--rotation", spec.rotation, "Drone rotation bound, radians")->capture_default_str();
  synth->add_option("--zoom", spec.zoom, "Largest drone footprint shrink")->capture_default_str();
  synth->add_option("--jitter", spec.jitter, "Photometric jitter on RGB")->capture_default_str();

  AugmentArgs aug;
  CLI::App* augment =
      app.add_subcommand("augment", "Crop new instances from a reconstruction");
  augment->add_option("--recon", aug.recon, "Reconstruction text directory")->required();
  augment->add_option("--sat", aug.sat, "Satellite annotation file")->required();
  augment->add_option("--images", aug.images,
                      "Drone image directory (default <recon>/images)");
  augment->add_option("-k,--k", aug.options.k, "Centers per instance")
      ->check(CLI::Range(1, 9))
      ->capture_default_str();
  augment->add_option("--radius", aug.options.radius,
                      "Height neighborhood half-size, 0 = 5% of the satellite diagonal")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  augment->add_option("--d-min", aug.options.d_min, "Smallest edge distance that yields a crop, px")->capture_default_str();
  augment->add_option("--d-max", aug.options.d_max, "Crop half-size cap, px")->capture_default_str();
  augment->add_option("--first-id", aug.options.first_instance_id,
                      "Id of the first new instance")
      ->capture_default_str();

  TrainArgs tr;
  CLI::App* train = app.add_subcommand("train", "Train the model");
  train->add_option("--data", tr.data, "Dataset root")->required();
  AddModelOptions(train, &tr.model);
  train->add_option("--steps", tr.train.steps, "Optimizer steps")
      ->capture_default_str();
  train->add_option("--lr", tr.train.learning_rate, "SGD learning rate")
      ->capture_default_str();
  train->add_option("--momentum", tr.train.momentum, "SGD momentum")
      ->capture_default_str();
  train->add_option("--margin", tr.train.margin, "Triplet margin")
      ->capture_default_str();
  train->add_option("--classes-per-batch", tr.train.classes_per_batch,
                    "Classes drawn per batch")
      ->capture_default_str();
  train->add_option("--samples-per-view", tr.train.samples_per_view,
                    "Samples per class and view")
      ->capture_default_str();
  train->add_option("--log-every", tr.log_every, "Print progress every N steps")
      ->capture_default_str();

  EmbedArgs em;
  CLI::App* embed = app.add_subcommand("embed", "Write descriptors for a split");
  embed->add_option("--run", em.run, "Training output directory")->required();
  embed->add_option("--data", em.data, "Dataset root")->required();
  embed->add_option("--split", em.split, "train, query or gallery")->capture_default_str();
  embed->add_option("--batch", em.batch, "Images per forward pass")->check(CLI::PositiveNumber)->capture_default_str();

  EvalArgs ev;
  CLI::App* eval = app.add_subcommand("eval", "Retrieval metrics from descriptor files");
  eval->add_option("--query", ev.query, "Query descriptor file")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--gallery", ev.gallery, "Gallery descriptor file")
      ->required()
      ->check(CLI::ExistingFile);

  GradcheckArgs gc;
  gc.model.input_size = 16;
  CLI::App* gradcheck =
      app.add_subcommand("gradcheck", "Finite-difference check of the training loss");
  AddModelOptions(gradcheck, &gc.model);
  gradcheck->add_option("--entries", gc.entries, "Entries probed per parameter")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gradcheck->add_option("--tolerance", gc.tolerance, "Largest accepted relative error")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    // Validate everything before touching the output directory.
    if (synth->parsed()) spec.Validate();
    if (augment->parsed() && !(aug.options.d_min > 0 && aug.options.d_min < aug.options.d_max)) {
      throw std::invalid_argument("need 0 < d-min < d-max");
    }
    if (train->parsed()) {
      ModelConfig c = tr.model.Resolve(g.seed);
      c.Validate();
      tr.train.Validate();
    }
    if (gradcheck->parsed()) gc.model.Resolve(g.seed).Validate();

    WriteEffectiveConfig(app, *app.get_subcommands().front(), g.out);
    if (synth->parsed()) return RunSynth(g, spec);
    if (augment->parsed()) return RunAugment(g, aug);
    if (train->parsed()) return RunTrain(g, tr);
    if (embed->parsed()) return RunEmbed(g, em);
    if (eval->parsed()) return RunEval(g, ev);
    if (gradcheck->parsed()) return RunGradcheck(g, gc);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}

}  // namespace
}  // namespace xvgeo

int main(int argc, char** argv) { return xvgeo::Main(argc, argv); }
