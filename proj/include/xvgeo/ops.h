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

// Differentiable operations recorded on a Tape. Image tensors use the
// [N, C, H, W] layout throughout.

#ifndef XVGEO_OPS_H_
#define XVGEO_OPS_H_

#include <span>
#include <vector>

#include "xvgeo/autodiff.h"

namespace xvgeo {

// Norm below which L2Normalize refuses to divide.
inline constexpr double kNormEpsilon = 1e-12;

// 2-D cross-correlation with zero padding.
// x: [N,C,H,W], weight: [O,C,k,k], bias: [O] -> [N,O,H',W'] with
// H' = (H + 2*pad - k) / stride + 1.
Var Conv2d(const Var& x, const Var& weight, const Var& bias, int stride,
           int pad);

enum class PoolKind {
  kSpatialAvg,     // [N,C,H,W] -> [N,C,1,1]
  kChannelAvg,     // [N,C,H,W] -> [N,1,H,W]
  kChannelMax,     // [N,C,H,W] -> [N,1,H,W]; ties route to the first channel
  kChannelAvgMax,  // [N,C,H,W] -> [N,2,H,W]; average then max
};
Var Pool(const Var& x, PoolKind kind);

// Elementwise ops on identically shaped operands.
Var Add(const Var& a, const Var& b);
Var Sub(const Var& a, const Var& b);
Var Mul(const Var& a, const Var& b);
Var Sigmoid(const Var& x);
Var Relu(const Var& x);
Var Scale(const Var& x, double factor);

// Broadcasting over operands of equal rank where every extent pair is
// either equal or contains a 1, e.g. [N,C,1,1] + [N,1,H,W] -> [N,C,H,W].
Var BroadcastAdd(const Var& a, const Var& b);
Var BroadcastMul(const Var& a, const Var& b);

// Matrix product over the last axis: x [..., I] * weight [I,O] + bias [O].
Var Linear(const Var& x, const Var& weight, const Var& bias);

Var Reshape(const Var& x, Shape shape);

// Concatenation / even split along axis 1 (channels for images, features for
// [N,D] rows).
Var ChannelConcat(const Var& a, const Var& b);
std::vector<Var> ChannelSplit(const Var& x, int parts);

// Unit Euclidean norm. Rank-1 input is normalized as a whole; rank-2 input
// is normalized row by row. Throws std::domain_error on a norm <= 1e-12.
Var L2Normalize(const Var& v);

// Mean over rows of -log softmax(logits)[label]. logits: [N,cls].
Var SoftmaxCrossEntropy(const Var& logits, std::span<const int> labels);

// Sum of all entries as a scalar.
Var Sum(const Var& x);

}  // namespace xvgeo

#endif  // XVGEO_OPS_H_
