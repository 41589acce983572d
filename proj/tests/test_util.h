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

#ifndef XVGEO_TESTS_TEST_UTIL_H_
#define XVGEO_TESTS_TEST_UTIL_H_

#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "xvgeo/autodiff.h"
#include "xvgeo/ops.h"

namespace xvgeo::testing {

inline Tensor RandomTensor(Shape shape, std::mt19937_64& rng, double lo = -1.0,
                           double hi = 1.0) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> dist(lo, hi);
  for (double& v : t.data()) v = dist(rng);
  return t;
}

inline Parameter MakeParam(const std::string& name, Tensor value) {
  Parameter p;
  p.name = name;
  p.value = std::move(value);
  p.ZeroGrad();
  return p;
}

// Scalar probe sum(out * weights) with fixed random weights, so that every
// output entry contributes a distinct amount to the loss.
inline Var Probe(const Var& out, uint64_t seed) {
  std::mt19937_64 rng(seed);
  Var w = out.tape()->Constant(RandomTensor(out.shape(), rng));
  return Sum(Mul(out, w));
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path ScratchDir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("xvgeo_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace xvgeo::testing

#endif  // XVGEO_TESTS_TEST_UTIL_H_
