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

// Difference-aware fusion between the RGB and normal branches.
//
// The branch difference f_d is gated by an even, bounded activation of its
// pooled statistics,
//
//   W = delta(p_s * SP(f_d) (+) p_c * CP(f_d)),
//   delta(x) = 1 - 4 sigmoid(x) (1 - sigmoid(x)),
//
// where SP/CP are spatial/channel average pooling and (+) broadcasts the
// [C,1,1] and [1,H,W] terms to [C,H,W]. The gated difference f_d * W is
// concatenated with the branch's own features and projected back to C
// channels by a 1x1 convolution.

#ifndef XVGEO_DAFM_H_
#define XVGEO_DAFM_H_

#include <string>

#include "xvgeo/autodiff.h"
#include "xvgeo/layers.h"

namespace xvgeo {

// delta(x) = 1 - 4 s(x)(1 - s(x)), s the logistic sigmoid. Range [0, 1).
double DeltaActivation(double x);
Var DeltaActivation(const Var& x);

struct DafmParams {
  Parameter* spatial_scale = nullptr;  // p_s, [C]
  Parameter* channel_scale = nullptr;  // p_c, [H*W]
  ConvParams reproject;                // 1x1, 2C -> C

  int channels() const { return spatial_scale->value.dim(0); }
  int positions() const { return channel_scale->value.dim(0); }
};

// Registers `<prefix>.p_s`, `<prefix>.p_c` (both initialized to 1) and
// `<prefix>.reproject.{weight,bias}`.
DafmParams AddDafmParams(ParameterStore& store, const std::string& prefix,
                         int channels, int height, int width,
                         Initializer& init);

// Activated weight map for a differential feature f_d: [N,C,H,W].
Var DafmWeights(const Var& diff, const DafmParams& params);

struct DafmOutput {
  Var fused_rgb;         // [N,C,H,W], input to the next RGB stage
  Var fused_normal;      // [N,C,H,W]
  Var amplified_rgb;     // (f_r - f_n) * W_r
  Var amplified_normal;  // (f_n - f_r) * W_n
  Var joint_rgb;         // concat(f_r, amplified_rgb), [N,2C,H,W]
  Var joint_normal;      // concat(f_n, amplified_normal)
};

DafmOutput DafmFuse(const Var& rgb, const Var& normal,
                    const DafmParams& rgb_params,
                    const DafmParams& normal_params);

}  // namespace xvgeo

#endif  // XVGEO_DAFM_H_
