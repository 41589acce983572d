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

#ifndef XVGEO_MODEL_H_
#define XVGEO_MODEL_H_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "xvgeo/autodiff.h"
#include "xvgeo/dafm.h"
#include "xvgeo/jcia.h"
#include "xvgeo/layers.h"

namespace xvgeo {

inline constexpr int kNumStages = 4;
// Fusion follows stages 1..3; the last stage feeds the aggregation head.
inline constexpr int kNumFusedStages = 3;

struct ModelConfig {
  std::vector<int> stage_channels = {8, 16, 32, 64};
  int input_height = 64;
  int input_width = 64;
  int aggregation_dim = 3;
  int num_classes = 20;
  int vector_dim = 512;
  uint64_t seed = 0;
  // false: RGB branch only, no fusion and no interaction in the head.
  bool use_normals = true;

  // Throws std::invalid_argument naming the offending field.
  void Validate() const;

  int final_channels() const { return stage_channels.back(); }
  int final_height() const { return input_height >> kNumStages; }
  int final_width() const { return input_width >> kNumStages; }
  int descriptor_dim() const {
    return aggregation_dim * final_channels() * (use_normals ? 2 : 1);
  }
};

struct BranchFeatures {
  Var rgb;     // [N, C4, H/16, W/16]
  Var normal;  // unset for RGB-only models
  // Pre-projection DAFM outputs per fused stage (normal-branch models only).
  std::vector<DafmOutput> fusion;
};

struct ModelOutput {
  JointDescriptor descriptor;  // normal/joint unset in RGB-only models,
                               // where joint == rgb
  Var vector_rgb;              // v_r, [N, vector_dim]
  Var vector_normal;           // v_n
  Var logits_rgb;              // z_r, [N, num_classes]
  Var logits_normal;           // z_n
};

// Dual-branch convolutional backbone with difference-aware fusion after the
// first three stages, the joint interaction aggregation head and one
// classifier per branch. Drone and satellite images share all weights.
class DualBranchModel {
 public:
  explicit DualBranchModel(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  ParameterStore& parameters() { return params_; }
  const ParameterStore& parameters() const { return params_; }

  // rgb/normal: [N,3,H,W] at the configured input size. `normal` is ignored
  // by RGB-only models.
  BranchFeatures ExtractFeatures(Tape& tape, const Tensor& rgb,
                                 const Tensor& normal) const;
  ModelOutput Forward(Tape& tape, const Tensor& rgb, const Tensor& normal) const;

  // Descriptor rows ready for cosine retrieval: the joint vector scaled to
  // unit norm, [N, descriptor_dim].
  Tensor Embed(const Tensor& rgb, const Tensor& normal) const;

 private:
  struct Branch {
    std::array<ConvParams, kNumStages> stages;
  };
  struct Classifier {
    LinearParams to_vector;  // d*C -> vector_dim
    LinearParams to_logits;  // vector_dim -> num_classes
  };

  void CheckInput(const Tensor& t, const char* what) const;

  ModelConfig config_;
  ParameterStore params_;
  Branch rgb_branch_;
  Branch normal_branch_;
  std::array<DafmParams, kNumFusedStages> dafm_rgb_;
  std::array<DafmParams, kNumFusedStages> dafm_normal_;
  std::optional<JciaParams> jcia_;
  LinearParams aggregate_rgb_only_;
  Classifier classifier_rgb_;
  Classifier classifier_normal_;
};

// Total learnable scalars for a configuration, summed over declared shapes.
size_t CountParameters(const ModelConfig& config);

// Checkpoint: little-endian; magic "JRNM", u32 version, then per parameter
// in name order: u32 name length, name bytes, u32 rank, u32 extents[rank],
// f64 data[]. Loading requires every model parameter to be present with
// identical shape.
inline constexpr uint32_t kCheckpointVersion = 1;
void SaveCheckpoint(const std::string& path, const ParameterStore& params);
void LoadCheckpoint(const std::string& path, ParameterStore& params);

}  // namespace xvgeo

#endif  // XVGEO_MODEL_H_
