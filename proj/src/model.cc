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

#include "xvgeo/model.h"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "binary_io.h"
#include "xvgeo/ops.h"

namespace xvgeo {
namespace {

constexpr char kCheckpointMagic[4] = {'J', 'R', 'N', 'M'};

std::string StageName(const char* branch, int stage) {
  return std::string(branch) + ".stage" + std::to_string(stage + 1);
}

}  // namespace

void ModelConfig::Validate() const {
  if (static_cast<int>(stage_channels.size()) != kNumStages) {
    throw std::invalid_argument("stage_channels must list exactly 4 stages");
  }
  for (int c : stage_channels) {
    if (c < 2 || c % 2 != 0) {
      throw std::invalid_argument(
          "stage_channels entries must be even and >= 2, got " +
          std::to_string(c));
    }
  }
  const int divisor = 1 << kNumStages;
  if (input_height < divisor || input_width < divisor ||
      input_height % divisor != 0 || input_width % divisor != 0) {
    throw std::invalid_argument(
        "input size must be a positive multiple of 16, got " +
        std::to_string(input_height) + "x" + std::to_string(input_width));
  }
  if (aggregation_dim < 1) {
    throw std::invalid_argument("aggregation_dim must be >= 1");
  }
  if (num_classes < 2) {
    throw std::invalid_argument("num_classes must be >= 2, got " +
                                std::to_string(num_classes));
  }
  if (vector_dim < 1) throw std::invalid_argument("vector_dim must be >= 1");
}

DualBranchModel::DualBranchModel(const ModelConfig& config) : config_(config) {
  config_.Validate();
  Initializer init(config_.seed);
  const auto& ch = config_.stage_channels;

  auto build_branch = [&](const char* name, Branch& branch) {
    int in = 3;
    for (int s = 0; s < kNumStages; ++s) {
      branch.stages[s] =
          AddConv(params_, StageName(name, s), ch[s], in, 3, kReluGain, init);
      in = ch[s];
    }
  };
  build_branch("rgb", rgb_branch_);
  if (config_.use_normals) {
    build_branch("normal", normal_branch_);
    for (int s = 0; s < kNumFusedStages; ++s) {
      const int h = config_.input_height >> (s + 1);
      const int w = config_.input_width >> (s + 1);
      const std::string prefix = "dafm" + std::to_string(s + 1);
      dafm_rgb_[s] = AddDafmParams(params_, prefix + ".r", ch[s], h, w, init);
      dafm_normal_[s] =
          AddDafmParams(params_, prefix + ".n", ch[s], h, w, init);
    }
    jcia_ = AddJciaParams(params_, "jcia", config_.final_channels(),
                          config_.final_height(), config_.final_width(),
                          config_.aggregation_dim, init);
  } else {
    aggregate_rgb_only_ = AddLinear(
        params_, "aggregate_r",
        config_.final_height() * config_.final_width(),
        config_.aggregation_dim, kLinearGain, init);
  }

  const int g_dim = config_.aggregation_dim * config_.final_channels();
  auto build_classifier = [&](const char* name, Classifier& head) {
    head.to_vector = AddLinear(params_, std::string(name) + ".fc1", g_dim,
                               config_.vector_dim, kLinearGain, init);
    head.to_logits = AddLinear(params_, std::string(name) + ".fc2",
                               config_.vector_dim, config_.num_classes,
                               kReluGain, init);
  };
  build_classifier("head_r", classifier_rgb_);
  if (config_.use_normals) build_classifier("head_n", classifier_normal_);
}

void DualBranchModel::CheckInput(const Tensor& t, const char* what) const {
  const Shape& s = t.shape();
  if (s.size() != 4 || s[1] != 3 || s[2] != config_.input_height ||
      s[3] != config_.input_width) {
    throw ShapeError(std::string(what) + " must be [N,3," +
                     std::to_string(config_.input_height) + "," +
                     std::to_string(config_.input_width) + "], got " +
                     ShapeToString(s));
  }
}

BranchFeatures DualBranchModel::ExtractFeatures(Tape& tape, const Tensor& rgb,
                                                const Tensor& normal) const {
  CheckInput(rgb, "rgb input");
  BranchFeatures out;
  Var r = tape.Constant(rgb);
  if (!config_.use_normals) {
    for (int s = 0; s < kNumStages; ++s) {
      r = Relu(ApplyConv(rgb_branch_.stages[s], r, 2, 1));
    }
    out.rgb = r;
    return out;
  }

  CheckInput(normal, "normal input");
  if (normal.dim(0) != rgb.dim(0)) {
    throw ShapeError("rgb and normal batches differ in size");
  }
  Var n = tape.Constant(normal);
  for (int s = 0; s < kNumStages; ++s) {
    r = Relu(ApplyConv(rgb_branch_.stages[s], r, 2, 1));
    n = Relu(ApplyConv(normal_branch_.stages[s], n, 2, 1));
    if (s < kNumFusedStages) {
      DafmOutput fused = DafmFuse(r, n, dafm_rgb_[s], dafm_normal_[s]);
      r = fused.fused_rgb;
      n = fused.fused_normal;
      out.fusion.push_back(std::move(fused));
    }
  }
  out.rgb = r;
  out.normal = n;
  return out;
}

ModelOutput DualBranchModel::Forward(Tape& tape, const Tensor& rgb,
                                     const Tensor& normal) const {
  const BranchFeatures features = ExtractFeatures(tape, rgb, normal);
  ModelOutput out;
  if (config_.use_normals) {
    out.descriptor = JciaForward(features.rgb, features.normal, *jcia_);
  } else {
    out.descriptor.rgb = AggregateDescriptor(features.rgb, aggregate_rgb_only_);
    out.descriptor.joint = out.descriptor.rgb;
  }
  out.vector_rgb = ApplyLinear(classifier_rgb_.to_vector, out.descriptor.rgb);
  out.logits_rgb =
      ApplyLinear(classifier_rgb_.to_logits, Relu(out.vector_rgb));
  if (config_.use_normals) {
    out.vector_normal =
        ApplyLinear(classifier_normal_.to_vector, out.descriptor.normal);
    out.logits_normal =
        ApplyLinear(classifier_normal_.to_logits, Relu(out.vector_normal));
  }
  return out;
}

Tensor DualBranchModel::Embed(const Tensor& rgb, const Tensor& normal) const {
  Tape tape;
  const ModelOutput out = Forward(tape, rgb, normal);
  Tensor joint = out.descriptor.joint.value();
  const int rows = joint.dim(0);
  const int cols = joint.dim(1);
  for (int r = 0; r < rows; ++r) {
    double* row = joint.raw() + static_cast<size_t>(r) * cols;
    double sq = 0.0;
    for (int j = 0; j < cols; ++j) sq += row[j] * row[j];
    const double inv = 1.0 / std::sqrt(sq);
    for (int j = 0; j < cols; ++j) row[j] *= inv;
  }
  return joint;
}

size_t CountParameters(const ModelConfig& config) {
  config.Validate();
  const auto& ch = config.stage_channels;
  const size_t branches = config.use_normals ? 2 : 1;
  size_t total = 0;
  int in = 3;
  for (int s = 0; s < kNumStages; ++s) {
    total += branches * (static_cast<size_t>(ch[s]) * in * 9 + ch[s]);
    in = ch[s];
  }
  const size_t c = config.final_channels();
  const size_t hw =
      static_cast<size_t>(config.final_height()) * config.final_width();
  const size_t d = config.aggregation_dim;
  if (config.use_normals) {
    for (int s = 0; s < kNumFusedStages; ++s) {
      const size_t hs = config.input_height >> (s + 1);
      const size_t ws = config.input_width >> (s + 1);
      const size_t cs = ch[s];
      // p_s + p_c + 1x1 reprojection 2C -> C with bias, per branch.
      total += 2 * (cs + hs * ws + cs * 2 * cs + cs);
    }
    total += 2 * (c * c + c);          // premaps
    total += 2 * 2 * 49 + 2;           // shared interaction conv
    total += 2 * (c * (c / 2) + c);    // projections
    total += 2 * (hw * d + d);         // spatial aggregation
  } else {
    total += hw * d + d;
  }
  const size_t g = d * c;
  const size_t v = config.vector_dim;
  const size_t k = config.num_classes;
  total += branches * (g * v + v + v * k + k);
  return total;
}

void SaveCheckpoint(const std::string& path, const ParameterStore& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  out.write(kCheckpointMagic, 4);
  internal::WriteLE<uint32_t>(out, kCheckpointVersion);
  for (const Parameter* p : params.All()) {
    internal::WriteLE<uint32_t>(out, static_cast<uint32_t>(p->name.size()));
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    internal::WriteLE<uint32_t>(out, static_cast<uint32_t>(p->value.rank()));
    for (int extent : p->value.shape()) {
      internal::WriteLE<uint32_t>(out, static_cast<uint32_t>(extent));
    }
    for (double v : p->value.data()) internal::WriteF64(out, v);
  }
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path);
}

void LoadCheckpoint(const std::string& path, ParameterStore& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[4];
  if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kCheckpointMagic)) {
    throw std::runtime_error("not a model checkpoint (bad magic): " + path);
  }
  const uint32_t version = internal::ReadLE<uint32_t>(in, "version");
  if (version != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version " +
                             std::to_string(version));
  }
  size_t loaded = 0;
  while (in.peek() != std::char_traits<char>::eof()) {
    const uint32_t name_len = internal::ReadLE<uint32_t>(in, "name length");
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) {
      throw std::runtime_error("truncated checkpoint parameter name");
    }
    const uint32_t rank = internal::ReadLE<uint32_t>(in, "rank");
    Shape shape(rank);
    for (uint32_t i = 0; i < rank; ++i) {
      shape[i] = static_cast<int>(internal::ReadLE<uint32_t>(in, "extent"));
    }
    if (!params.Contains(name)) {
      throw std::runtime_error("checkpoint parameter not in model: " + name);
    }
    Parameter& p = params.Get(name);
    if (p.value.shape() != shape) {
      throw std::runtime_error("checkpoint shape mismatch for " + name + ": " +
                               ShapeToString(shape) + " vs model " +
                               ShapeToString(p.value.shape()));
    }
    for (double& v : p.value.data()) v = internal::ReadF64(in, name);
    ++loaded;
  }
  if (loaded != params.size()) {
    throw std::runtime_error("checkpoint holds " + std::to_string(loaded) +
                             " parameters, model has " +
                             std::to_string(params.size()));
  }
}

}  // namespace xvgeo
