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

#include "xvgeo/jcia.h"

#include "xvgeo/ops.h"

namespace xvgeo {
namespace {

void RequireSameShape4(const Var& a, const Var& b, const char* what) {
  if (a.shape().size() != 4 || a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": expected matching [N,C,H,W], got " +
                     ShapeToString(a.shape()) + " and " +
                     ShapeToString(b.shape()));
  }
}

Var InteractionFor(const Var& rgb_half, const Var& normal_half,
                   const JciaParams& params) {
  const Var pooled =
      Pool(ChannelConcat(rgb_half, normal_half), PoolKind::kChannelAvgMax);
  return Sigmoid(
      ApplyConv(params.interaction, pooled, 1, kInteractionPad));
}

Var AttentionFor(const Var& rgb_half, const Var& normal_half, const Var& sw,
                 const ConvParams& project) {
  const std::vector<Var> gates = ChannelSplit(sw, 2);
  const Var mixed = Add(BroadcastMul(gates[0], rgb_half),
                        BroadcastMul(gates[1], normal_half));
  return ApplyConv(project, mixed, 1, 0);
}

}  // namespace

JciaParams AddJciaParams(ParameterStore& store, const std::string& prefix,
                         int channels, int height, int width,
                         int aggregation_dim, Initializer& init) {
  if (channels < 2 || channels % 2 != 0) {
    throw std::invalid_argument("jcia: channel count must be even, got " +
                                std::to_string(channels));
  }
  if (aggregation_dim < 1) {
    throw std::invalid_argument("jcia: aggregation dimension must be >= 1");
  }
  const int half = channels / 2;
  const int positions = height * width;
  JciaParams p;
  p.premap_rgb = AddConv(store, prefix + ".premap_r", channels, channels, 1,
                         kLinearGain, init);
  p.premap_normal = AddConv(store, prefix + ".premap_n", channels, channels, 1,
                            kLinearGain, init);
  p.interaction = AddConv(store, prefix + ".interaction", 2, 2,
                          kInteractionKernel, kLinearGain, init);
  p.project_rgb =
      AddConv(store, prefix + ".project_r", channels, half, 1, kLinearGain, init);
  p.project_normal =
      AddConv(store, prefix + ".project_n", channels, half, 1, kLinearGain, init);
  p.aggregate_rgb = AddLinear(store, prefix + ".aggregate_r", positions,
                              aggregation_dim, kLinearGain, init);
  p.aggregate_normal = AddLinear(store, prefix + ".aggregate_n", positions,
                                 aggregation_dim, kLinearGain, init);
  return p;
}

Var AggregateDescriptor(const Var& features, const LinearParams& aggregate) {
  const Shape& s = features.shape();
  if (s.size() != 4) {
    throw ShapeError("aggregate: expected [N,C,H,W], got " + ShapeToString(s));
  }
  const int n = s[0], c = s[1];
  const Var flat = Reshape(features, Shape{n, c, s[2] * s[3]});
  const Var pooled = ApplyLinear(aggregate, flat);  // [N, C, d]
  const int d = pooled.shape()[2];
  return L2Normalize(Reshape(pooled, Shape{n, c * d}));
}

SpatialInteraction SpatialInteractionWeights(const Var& rgb_first,
                                             const Var& normal_first,
                                             const Var& rgb_second,
                                             const Var& normal_second,
                                             const JciaParams& params) {
  RequireSameShape4(rgb_first, normal_first, "spatial_interaction_weights");
  RequireSameShape4(rgb_first, rgb_second, "spatial_interaction_weights");
  RequireSameShape4(rgb_first, normal_second, "spatial_interaction_weights");
  return {InteractionFor(rgb_first, normal_first, params),
          InteractionFor(rgb_second, normal_second, params)};
}

GlobalAttention GlobalAttentionWeights(const Var& rgb_first,
                                       const Var& normal_first,
                                       const Var& rgb_second,
                                       const Var& normal_second,
                                       const SpatialInteraction& sw,
                                       const JciaParams& params) {
  RequireSameShape4(rgb_first, normal_first, "global_attention_weights");
  RequireSameShape4(rgb_second, normal_second, "global_attention_weights");
  return {AttentionFor(rgb_first, normal_first, sw.rgb, params.project_rgb),
          AttentionFor(rgb_second, normal_second, sw.normal,
                       params.project_normal)};
}

JointDescriptor JciaForward(const Var& rgb, const Var& normal,
                            const JciaParams& params, JciaTrace* trace) {
  RequireSameShape4(rgb, normal, "jcia_forward");
  const Shape& s = rgb.shape();
  if (s[1] != params.channels() || s[2] * s[3] != params.positions()) {
    throw ShapeError("jcia_forward: features " + ShapeToString(s) +
                     " do not match parameters for C=" +
                     std::to_string(params.channels()) +
                     ", H*W=" + std::to_string(params.positions()));
  }
  const std::vector<Var> rgb_halves =
      ChannelSplit(ApplyConv(params.premap_rgb, rgb, 1, 0), 2);
  const std::vector<Var> normal_halves =
      ChannelSplit(ApplyConv(params.premap_normal, normal, 1, 0), 2);

  const SpatialInteraction sw = SpatialInteractionWeights(
      rgb_halves[0], normal_halves[0], rgb_halves[1], normal_halves[1], params);
  const GlobalAttention gw =
      GlobalAttentionWeights(rgb_halves[0], normal_halves[0], rgb_halves[1],
                             normal_halves[1], sw, params);

  const Var refined_rgb = Add(rgb, Mul(rgb, gw.rgb));
  const Var refined_normal = Add(normal, Mul(normal, gw.normal));

  JointDescriptor out;
  out.rgb = AggregateDescriptor(refined_rgb, params.aggregate_rgb);
  out.normal = AggregateDescriptor(refined_normal, params.aggregate_normal);
  out.joint = ChannelConcat(out.rgb, out.normal);
  if (trace != nullptr) {
    trace->sw = sw;
    trace->gw = gw;
    trace->refined_rgb = refined_rgb;
    trace->refined_normal = refined_normal;
  }
  return out;
}

}  // namespace xvgeo
