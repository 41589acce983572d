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

#include "xvgeo/grad_check.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace xvgeo {
namespace {

double Evaluate(const LossClosure& loss) {
  Tape tape;
  const double value = loss(tape).value().item();
  if (!std::isfinite(value)) {
    throw std::domain_error("grad_check: non-finite loss value");
  }
  return value;
}

}  // namespace

GradCheckReport GradCheck(const LossClosure& loss,
                          std::span<Parameter* const> params,
                          const GradCheckOptions& options) {
  if (!(options.eps >= 1e-7 && options.eps <= 1e-3)) {
    throw std::invalid_argument("grad_check: eps must lie in [1e-7, 1e-3]");
  }
  for (Parameter* p : params) p->ZeroGrad();
  {
    Tape tape;
    Var out = loss(tape);
    if (!std::isfinite(out.value().item())) {
      throw std::domain_error("grad_check: non-finite loss value");
    }
    tape.Backward(out);
  }

  std::mt19937_64 rng(options.seed);
  GradCheckReport report;
  for (Parameter* p : params) {
    ParameterGradError entry{p->name, 0.0, 0};
    std::vector<size_t> indices(p->value.size());
    std::iota(indices.begin(), indices.end(), size_t{0});
    if (options.max_entries_per_parameter > 0 &&
        indices.size() > static_cast<size_t>(options.max_entries_per_parameter)) {
      std::shuffle(indices.begin(), indices.end(), rng);
      indices.resize(options.max_entries_per_parameter);
      std::sort(indices.begin(), indices.end());
    }
    for (size_t i : indices) {
      const double analytic = p->grad[i];
      if (!std::isfinite(analytic)) {
        throw std::domain_error("grad_check: non-finite gradient in " + p->name);
      }
      const double saved = p->value[i];
      p->value[i] = saved + options.eps;
      const double plus = Evaluate(loss);
      p->value[i] = saved - options.eps;
      const double minus = Evaluate(loss);
      p->value[i] = saved;
      const double numeric = (plus - minus) / (2.0 * options.eps);
      const double denom =
          std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      entry.max_rel_error =
          std::max(entry.max_rel_error, std::abs(analytic - numeric) / denom);
      ++entry.entries_checked;
    }
    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.per_parameter.push_back(std::move(entry));
  }
  return report;
}

double MaxGradError(const LossClosure& loss, std::span<Parameter* const> params,
                    double eps) {
  GradCheckOptions options;
  options.eps = eps;
  return GradCheck(loss, params, options).max_rel_error;
}

}  // namespace xvgeo
