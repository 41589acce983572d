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

#ifndef XVGEO_GRAD_CHECK_H_
#define XVGEO_GRAD_CHECK_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "xvgeo/autodiff.h"

namespace xvgeo {

// Builds a scalar loss on the given tape. Must be deterministic.
using LossClosure = std::function<Var(Tape&)>;

struct GradCheckOptions {
  double eps = 1e-5;
  // When > 0, only this many entries per parameter are probed, chosen by a
  // seeded draw without replacement. 0 probes every entry.
  int max_entries_per_parameter = 0;
  uint64_t seed = 0;
};

struct ParameterGradError {
  std::string name;
  double max_rel_error = 0.0;
  size_t entries_checked = 0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::vector<ParameterGradError> per_parameter;
};

// Compares analytic gradients against central differences
// (f(theta+eps) - f(theta-eps)) / (2 eps) with the relative error
// |a - n| / max(|a|, |n|, 1e-8). Throws std::domain_error on non-finite
// values and std::invalid_argument when eps is outside [1e-7, 1e-3].
GradCheckReport GradCheck(const LossClosure& loss,
                          std::span<Parameter* const> params,
                          const GradCheckOptions& options = {});

// Maximum relative error over all parameter entries.
double MaxGradError(const LossClosure& loss, std::span<Parameter* const> params,
                    double eps);

}  // namespace xvgeo

#endif  // XVGEO_GRAD_CHECK_H_
