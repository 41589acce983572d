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

#include "xvgeo/train.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <map>
#include <stdexcept>

namespace xvgeo {
namespace {

namespace fs = std::filesystem;

bool ParseClassId(const std::string& name, uint32_t* id) {
  const char* end = name.data() + name.size();
  const auto result = std::from_chars(name.data(), end, *id);
  return result.ec == std::errc() && result.ptr == end;
}

// Numeric stem order, so 10.png follows 9.png.
bool StemLess(const fs::path& a, const fs::path& b) {
  const std::string sa = a.stem().string();
  const std::string sb = b.stem().string();
  if (sa.size() != sb.size()) return sa.size() < sb.size();
  return sa < sb;
}

}  // namespace

Tensor ImageToTensor(const Image& image) {
  const int h = image.height();
  const int w = image.width();
  Tensor t({3, h, w});
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        t[(static_cast<size_t>(c) * h + y) * w + x] = image.at(x, y, c) / 127.5 - 1.0;
      }
    }
  }
  return t;
}

std::vector<Sample> LoadSplit(const fs::path& root, const std::string& split,
                              int height, int width) {
  const fs::path split_dir = root / split;
  if (!fs::is_directory(split_dir)) {
    throw std::runtime_error("missing dataset split directory " +
                             split_dir.string());
  }
  std::vector<Sample> out;
  for (View view : {View::kDrone, View::kSatellite}) {
    const fs::path view_dir = split_dir / ViewName(view);
    if (!fs::is_directory(view_dir)) continue;
    std::map<uint32_t, fs::path> classes;
    for (const auto& entry : fs::directory_iterator(view_dir)) {
      uint32_t id = 0;
      if (!entry.is_directory()) continue;
      if (!ParseClassId(entry.path().filename().string(), &id)) {
        throw std::runtime_error("class directory name is not numeric: " +
                                 entry.path().string());
      }
      classes.emplace(id, entry.path());
    }
    for (const auto& [id, dir] : classes) {
      std::vector<fs::path> files;
      for (const auto& entry : fs::directory_iterator(dir)) {
        const fs::path& p = entry.path();
        if (p.extension() != ".png") continue;
        const std::string stem = p.stem().string();
        if (stem.size() >= 7 && stem.ends_with("_normal")) continue;
        files.push_back(p);
      }
      std::sort(files.begin(), files.end(), StemLess);
      for (const fs::path& rgb_path : files) {
        const fs::path normal_path =
            rgb_path.parent_path() / (rgb_path.stem().string() + "_normal.png");
        if (!fs::exists(normal_path)) {
          throw std::runtime_error("missing normal image " + normal_path.string());
        }
        Sample s;
        s.class_id = id;
        s.view = view;
        s.path = rgb_path.string();
        s.rgb = ImageToTensor(Resize(ReadImage(rgb_path.string()), width, height));
        s.normal =
            ImageToTensor(Resize(ReadImage(normal_path.string()), width, height));
        out.push_back(std::move(s));
      }
    }
  }
  return out;
}

BatchSampler::BatchSampler(const std::vector<Sample>& samples,
                           int classes_per_batch, int samples_per_view,
                           uint64_t seed)
    : samples_(samples),
      classes_per_batch_(classes_per_batch),
      samples_per_view_(samples_per_view),
      rng_(seed) {
  std::map<uint32_t, std::array<std::vector<size_t>, 2>> by_class;
  for (size_t i = 0; i < samples.size(); ++i) {
    by_class[samples[i].class_id][static_cast<int>(samples[i].view)].push_back(i);
  }
  for (auto& [id, pools] : by_class) {
    if (pools[0].empty() || pools[1].empty()) {
      throw std::invalid_argument("class " + std::to_string(id) +
                                  " lacks drone or satellite samples");
    }
    class_ids_.push_back(id);
    pools_.push_back(std::move(pools));
  }
  if (classes_per_batch < 2 || classes_per_batch > num_classes()) {
    throw std::invalid_argument(
        "classes per batch must be in [2, " + std::to_string(num_classes()) +
        "], got " + std::to_string(classes_per_batch));
  }
  if (samples_per_view < 1) {
    throw std::invalid_argument("samples per view must be >= 1");
  }
}

Batch BatchSampler::Next() {
  std::vector<int> labels(class_ids_.size());
  for (size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i);
  std::shuffle(labels.begin(), labels.end(), rng_);
  labels.resize(classes_per_batch_);

  std::vector<const Sample*> picked;
  std::vector<int> picked_labels;
  for (int label : labels) {
    for (int v = 0; v < 2; ++v) {
      const auto& pool = pools_[label][v];
      std::uniform_int_distribution<size_t> pick(0, pool.size() - 1);
      for (int s = 0; s < samples_per_view_; ++s) {
        picked.push_back(&samples_[pool[pick(rng_)]]);
        picked_labels.push_back(label);
      }
    }
  }
  Batch batch = Stack(picked);
  batch.labels.class_id = std::move(picked_labels);
  return batch;
}

Batch Stack(const std::vector<const Sample*>& samples) {
  if (samples.empty()) throw std::invalid_argument("cannot stack an empty batch");
  const Shape& s = samples.front()->rgb.shape();
  const size_t per = samples.front()->rgb.size();
  const int n = static_cast<int>(samples.size());
  Batch batch{Tensor({n, s[0], s[1], s[2]}), Tensor({n, s[0], s[1], s[2]}), {}};
  for (int i = 0; i < n; ++i) {
    const Sample& sample = *samples[i];
    if (sample.rgb.shape() != s || sample.normal.shape() != s) {
      throw std::invalid_argument("samples differ in size: " + sample.path);
    }
    std::copy_n(sample.rgb.raw(), per, batch.rgb.raw() + i * per);
    std::copy_n(sample.normal.raw(), per, batch.normal.raw() + i * per);
    batch.labels.class_id.push_back(static_cast<int>(sample.class_id));
    batch.labels.view.push_back(sample.view);
  }
  return batch;
}

void TrainOptions::Validate() const {
  if (steps < 0) throw std::invalid_argument("steps must be >= 0");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("learning rate must be positive");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw std::invalid_argument("momentum must be in [0, 1)");
  }
  if (!(margin >= 0.0) || !std::isfinite(margin)) {
    throw std::invalid_argument("margin must be >= 0");
  }
  if (classes_per_batch < 2) {
    throw std::invalid_argument("classes per batch must be >= 2");
  }
  if (samples_per_view < 1) {
    throw std::invalid_argument("samples per view must be >= 1");
  }
}

SgdMomentum::SgdMomentum(ParameterStore& params, double learning_rate,
                         double momentum)
    : params_(params.All()), learning_rate_(learning_rate), momentum_(momentum) {
  for (const Parameter* p : params_) velocity_.emplace_back(p->value.shape());
}

void SgdMomentum::Step() {
  for (size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = *params_[i];
    double* v = velocity_[i].raw();
    double* w = p.value.raw();
    const double* g = p.grad.raw();
    for (size_t j = 0; j < p.value.size(); ++j) {
      v[j] = momentum_ * v[j] + g[j];
      w[j] -= learning_rate_ * v[j];
    }
  }
}

std::vector<StepLog> Train(DualBranchModel& model,
                           const std::vector<Sample>& train,
                           const TrainOptions& options,
                           const std::function<void(const StepLog&)>& on_step) {
  options.Validate();
  BatchSampler sampler(train, options.classes_per_batch,
                       options.samples_per_view, options.seed);
  if (sampler.num_classes() != model.config().num_classes) {
    throw std::invalid_argument(
        "training split has " + std::to_string(sampler.num_classes()) +
        " classes, model expects " +
        std::to_string(model.config().num_classes));
  }
  SgdMomentum sgd(model.parameters(), options.learning_rate, options.momentum);
  std::vector<StepLog> log;
  for (int step = 1; step <= options.steps; ++step) {
    Batch batch = sampler.Next();
    model.parameters().ZeroGrad();
    Tape tape;
    LossBreakdown loss;
    try {
      const ModelOutput out = model.Forward(tape, batch.rgb, batch.normal);
      loss = ModelLoss(out, batch.labels, options.margin);
    } catch (const std::domain_error& e) {
      throw std::runtime_error("non-finite loss at step " + std::to_string(step) +
                               ": " + e.what());
    }
    const StepLog entry{step, loss.triplet.value().item(),
                        loss.cross_entropy.value().item(),
                        loss.total.value().item()};
    tape.Backward(loss.total);
    sgd.Step();
    log.push_back(entry);
    if (on_step) on_step(entry);
  }
  return log;
}

std::vector<Descriptor> EmbedSamples(const DualBranchModel& model,
                                     const std::vector<Sample>& samples,
                                     int batch_size) {
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  std::vector<Descriptor> out;
  for (size_t begin = 0; begin < samples.size(); begin += batch_size) {
    const size_t end = std::min(samples.size(), begin + batch_size);
    std::vector<const Sample*> chunk;
    for (size_t i = begin; i < end; ++i) chunk.push_back(&samples[i]);
    const Batch batch = Stack(chunk);
    const Tensor joint = model.Embed(batch.rgb, batch.normal);
    const int dim = joint.dim(1);
    for (size_t i = begin; i < end; ++i) {
      const double* row = joint.raw() + (i - begin) * dim;
      out.push_back({samples[i].class_id, samples[i].view,
                     std::vector<double>(row, row + dim)});
    }
  }
  return out;
}

GradCheckReport CheckModelGradients(DualBranchModel& model,
                                    int entries_per_parameter, uint64_t seed) {
  const ModelConfig& config = model.config();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const Shape shape = {4, 3, config.input_height, config.input_width};
  Tensor rgb(shape);
  Tensor normal(shape);
  for (double& v : rgb.data()) v = unit(rng);
  for (double& v : normal.data()) v = unit(rng);
  BatchLabels labels;
  labels.class_id = {0, 0, 1, 1};
  labels.view = {View::kDrone, View::kSatellite, View::kDrone, View::kSatellite};
  const LossClosure loss = [&](Tape& tape) {
    return ModelLoss(model.Forward(tape, rgb, normal), labels).total;
  };

  std::vector<Parameter*> fine;
  std::vector<Parameter*> coarse;
  for (Parameter* p : model.parameters().All()) {
    const bool gate = p->name.starts_with("dafm") &&
                      (p->name.ends_with(".p_s") || p->name.ends_with(".p_c"));
    (gate ? coarse : fine).push_back(p);
  }
  GradCheckOptions options;
  options.max_entries_per_parameter = entries_per_parameter;
  options.seed = seed;
  GradCheckReport report = GradCheck(loss, fine, options);
  if (!coarse.empty()) {
    options.eps = 1e-3;
    const GradCheckReport gates = GradCheck(loss, coarse, options);
    report.max_rel_error = std::max(report.max_rel_error, gates.max_rel_error);
    report.per_parameter.insert(report.per_parameter.end(),
                                gates.per_parameter.begin(),
                                gates.per_parameter.end());
    std::sort(report.per_parameter.begin(), report.per_parameter.end(),
              [](const auto& a, const auto& b) { return a.name < b.name; });
  }
  return report;
}

CrossViewMetrics EvaluateCrossView(const std::vector<Descriptor>& drone,
                                   const std::vector<Descriptor>& satellite) {
  const std::vector<int> ks = {1, 5, 10};
  CrossViewMetrics m;
  m.drone_to_satellite =
      EvaluateRetrieval("drone->satellite", drone, BuildIndex(satellite), ks);
  m.satellite_to_drone =
      EvaluateRetrieval("satellite->drone", satellite, BuildIndex(drone), ks);
  return m;
}

}  // namespace xvgeo
