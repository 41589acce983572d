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

#include "xvgeo/dafm.h"

#include <algorithm>
#include <cmath>

#include "xvgeo/ops.h"

namespace xvgeo {

// 1 - 4 s (1 - s) = (2 s - 1)^2 = tanh^2(x / 2). The tanh form is exactly
// even in floating point. Saturated inputs are held just below 1.
double DeltaActivation(double x) {
  const double t = std::tanh(0.5 * x);
  return std::min(t * t, std::nextafter(1.0, 0.0));
}

Var DeltaActivation(const Var& x) {
  Tensor out = x.value();
  for (double& v : out.data()) v = DeltaActivation(v);
  return x.tape()->Record(std::move(out), {x},
                          [x](Tape& t, const Tensor& g) {
                            Tensor* gx = t.GradOf(x);
                            const Tensor& vx = t.value(x);
                            for (size_t i = 0; i < g.size(); ++i) {
                              const double th = std::tanh(0.5 * vx[i]);
                              (*gx)[i] += g[i] * th * (1.0 - th * th);
                            }
                          });
}

DafmParams AddDafmParams(ParameterStore& store, const std::string& prefix,
                         int channels, int height, int width,
                         Initializer& init) {
  DafmParams p;
  p.spatial_scale = &store.Add(prefix + ".p_s", Tensor(Shape{channels}, 1.0));
  p.channel_scale =
      &store.Add(prefix + ".p_c", Tensor(Shape{height * width}, 1.0));
  p.reproject = AddConv(store, prefix + ".reproject", channels, 2 * channels,
                        1, kLinearGain, init);
  return p;
}

Var DafmWeights(const Var& diff, const DafmParams& params) {
  const Shape& s = diff.shape();
  if (s.size() != 4) {
    throw ShapeError("dafm_weights: expected [N,C,H,W], got " +
                     ShapeToString(s));
  }
  const int c = s[1], h = s[2], w = s[3];
  if (c != params.channels() || h * w != params.positions()) {
    throw ShapeError("dafm_weights: input " + ShapeToString(s) +
                     " does not match parameters for C=" +
                     std::to_string(params.channels()) + ", H*W=" +
                     std::to_string(params.positions()));
  }
  Tape& tape = *diff.tape();
  const Var p_s = Reshape(tape.Param(*params.spatial_scale), Shape{1, c, 1, 1});
  const Var p_c = Reshape(tape.Param(*params.channel_scale), Shape{1, 1, h, w});
  const Var spatial = BroadcastMul(p_s, Pool(diff, PoolKind::kSpatialAvg));
  const Var channel = BroadcastMul(p_c, Pool(diff, PoolKind::kChannelAvg));
  return DeltaActivation(BroadcastAdd(spatial, channel));
}

DafmOutput DafmFuse(const Var& rgb, const Var& normal,
                    const DafmParams& rgb_params,
                    const DafmParams& normal_params) {
  if (rgb.shape() != normal.shape()) {
    throw ShapeError("dafm_fuse: branch shapes differ " +
                     ShapeToString(rgb.shape()) + " vs " +
                     ShapeToString(normal.shape()));
  }
  DafmOutput out;
  const Var diff_rgb = Sub(rgb, normal);
  const Var diff_normal = Sub(normal, rgb);
  out.amplified_rgb = Mul(diff_rgb, DafmWeights(diff_rgb, rgb_params));
  out.amplified_normal =
      Mul(diff_normal, DafmWeights(diff_normal, normal_params));
  out.joint_rgb = ChannelConcat(rgb, out.amplified_rgb);
  out.joint_normal = ChannelConcat(normal, out.amplified_normal);
  out.fused_rgb = ApplyConv(rgb_params.reproject, out.joint_rgb, 1, 0);
  out.fused_normal = ApplyConv(normal_params.reproject, out.joint_normal, 1, 0);
  return out;
}

}  // namespace xvgeo
