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

// Joint-constrained interaction aggregation head.
//
// Both branch feature maps are mapped channel-wise and split in halves
// (f'_r^1, f'_r^2, f'_n^1, f'_n^2). Each pairing q is pooled across
// channels (average and max), passed through a shared 2->2 convolution and
// a sigmoid, giving the spatial interaction weights SW_r (q = 1) and SW_n
// (q = 2). Their two channels reweight the paired halves, which are summed
// and projected back to C channels to form the global attention GW. The
// residual f + f * GW is aggregated over space by a linear map H*W -> d
// per channel, flattened to d*C and L2-normalized.

#ifndef XVGEO_JCIA_H_
#define XVGEO_JCIA_H_

#include <string>

#include "xvgeo/autodiff.h"
#include "xvgeo/layers.h"

namespace xvgeo {

inline constexpr int kInteractionKernel = 7;
inline constexpr int kInteractionPad = 3;

struct JciaParams {
  ConvParams premap_rgb;     // 1x1, C -> C
  ConvParams premap_normal;  // 1x1, C -> C
  ConvParams interaction;    // 7x7, 2 -> 2, shared by both pairings
  ConvParams project_rgb;    // 1x1, C/2 -> C
  ConvParams project_normal;
  LinearParams aggregate_rgb;  // H*W -> d
  LinearParams aggregate_normal;

  int channels() const { return premap_rgb.weight->value.dim(0); }
  int positions() const { return aggregate_rgb.weight->value.dim(0); }
  int aggregation_dim() const { return aggregate_rgb.weight->value.dim(1); }
};

JciaParams AddJciaParams(ParameterStore& store, const std::string& prefix,
                         int channels, int height, int width,
                         int aggregation_dim, Initializer& init);

// Single-branch aggregation (flatten, H*W -> d, flatten, L2-normalize):
// [N,C,H,W] -> [N, d*C].
Var AggregateDescriptor(const Var& features, const LinearParams& aggregate);

struct SpatialInteraction {
  Var rgb;     // SW_r, [N,2,H,W]
  Var normal;  // SW_n, [N,2,H,W]
};

SpatialInteraction SpatialInteractionWeights(const Var& rgb_first,
                                             const Var& normal_first,
                                             const Var& rgb_second,
                                             const Var& normal_second,
                                             const JciaParams& params);

struct GlobalAttention {
  Var rgb;     // GW_r, [N,C,H,W]
  Var normal;  // GW_n, [N,C,H,W]
};

GlobalAttention GlobalAttentionWeights(const Var& rgb_first,
                                       const Var& normal_first,
                                       const Var& rgb_second,
                                       const Var& normal_second,
                                       const SpatialInteraction& sw,
                                       const JciaParams& params);

// Batched pair of unit descriptors and their concatenation.
struct JointDescriptor {
  Var rgb;     // g_r, [N, d*C]
  Var normal;  // g_n, [N, d*C]
  Var joint;   // [g_r ; g_n], [N, 2*d*C]
};

struct JciaTrace {
  SpatialInteraction sw;
  GlobalAttention gw;
  Var refined_rgb;  // f_r + f_r * GW_r
  Var refined_normal;
};

JointDescriptor JciaForward(const Var& rgb, const Var& normal,
                            const JciaParams& params,
                            JciaTrace* trace = nullptr);

}  // namespace xvgeo

#endif  // XVGEO_JCIA_H_
