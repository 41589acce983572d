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

#include "xvgeo/layers.h"

#include <cmath>

namespace xvgeo {

Tensor Initializer::FanInUniform(Shape shape, int fan_in, double gain) {
  Tensor t(std::move(shape));
  const double bound = std::sqrt(gain / fan_in);
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : t.data()) v = dist(rng_);
  return t;
}

ConvParams AddConv(ParameterStore& store, const std::string& name, int out,
                   int in, int kernel, double gain, Initializer& init) {
  ConvParams p;
  p.weight = &store.Add(name + ".weight",
                        init.FanInUniform(Shape{out, in, kernel, kernel},
                                          in * kernel * kernel, gain));
  p.bias = &store.Add(name + ".bias", Tensor(Shape{out}));
  return p;
}

LinearParams AddLinear(ParameterStore& store, const std::string& name, int in,
                       int out, double gain, Initializer& init) {
  LinearParams p;
  p.weight = &store.Add(name + ".weight",
                        init.FanInUniform(Shape{in, out}, in, gain));
  p.bias = &store.Add(name + ".bias", Tensor(Shape{out}));
  return p;
}

Var ApplyConv(const ConvParams& params, const Var& x, int stride, int pad) {
  Tape& tape = *x.tape();
  return Conv2d(x, tape.Param(*params.weight), tape.Param(*params.bias), stride,
                pad);
}

Var ApplyLinear(const LinearParams& params, const Var& x) {
  Tape& tape = *x.tape();
  return Linear(x, tape.Param(*params.weight), tape.Param(*params.bias));
}

}  // namespace xvgeo
