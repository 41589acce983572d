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

// Parameter bundles for convolution and linear layers, with seeded
// fan-in-scaled uniform initialization.

#ifndef XVGEO_LAYERS_H_
#define XVGEO_LAYERS_H_

#include <cstdint>
#include <random>
#include <string>

#include "xvgeo/autodiff.h"
#include "xvgeo/ops.h"

namespace xvgeo {

class Initializer {
 public:
  explicit Initializer(uint64_t seed) : rng_(seed) {}

  // Uniform(-bound, bound) with bound = sqrt(gain / fan_in).
  Tensor FanInUniform(Shape shape, int fan_in, double gain);

 private:
  std::mt19937_64 rng_;
};

// Gain for layers followed by a rectifier (He) and for plain linear maps.
inline constexpr double kReluGain = 6.0;
inline constexpr double kLinearGain = 3.0;

struct ConvParams {
  Parameter* weight = nullptr;  // [O, C, k, k]
  Parameter* bias = nullptr;    // [O]
};

struct LinearParams {
  Parameter* weight = nullptr;  // [I, O]
  Parameter* bias = nullptr;    // [O]
};

ConvParams AddConv(ParameterStore& store, const std::string& name, int out,
                   int in, int kernel, double gain, Initializer& init);
LinearParams AddLinear(ParameterStore& store, const std::string& name, int in,
                       int out, double gain, Initializer& init);

Var ApplyConv(const ConvParams& params, const Var& x, int stride, int pad);
Var ApplyLinear(const LinearParams& params, const Var& x);

}  // namespace xvgeo

#endif  // XVGEO_LAYERS_H_
