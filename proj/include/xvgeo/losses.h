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

#ifndef XVGEO_LOSSES_H_
#define XVGEO_LOSSES_H_

#include <cstdint>
#include <vector>

#include "xvgeo/autodiff.h"
#include "xvgeo/model.h"
#include "xvgeo/view.h"

namespace xvgeo {

// Per-sample supervision of a training batch. Every class must appear in at
// least two samples covering both views.
struct BatchLabels {
  std::vector<int> class_id;
  std::vector<View> view;

  size_t size() const { return class_id.size(); }
  // Throws std::invalid_argument when the invariant does not hold.
  void Validate() const;
};

inline constexpr double kDefaultMargin = 0.3;

// Batch-hard triplet loss on embeddings [N,D]: per anchor the farthest
// same-class sample of the other view is the positive, the nearest sample of
// another class the negative; mean of max(0, margin + d(a,p) - d(a,n)).
Var TripletLoss(const Var& embeddings, const BatchLabels& labels,
                double margin = kDefaultMargin);

// Mean of the softmax cross-entropy over the two branches' logits.
Var CrossEntropyLoss(const Var& logits_rgb, const Var& logits_normal,
                     const BatchLabels& labels);

// L_total = L_triplet + L_ce. Both inputs must be finite scalars.
Var TotalLoss(const Var& triplet, const Var& cross_entropy);

struct LossBreakdown {
  Var triplet;
  Var cross_entropy;
  Var total;
};

// Triplet terms are averaged over the branches, cross-entropy terms likewise;
// RGB-only models contribute their single branch.
LossBreakdown ModelLoss(const ModelOutput& out, const BatchLabels& labels,
                        double margin = kDefaultMargin);

}  // namespace xvgeo

#endif  // XVGEO_LOSSES_H_
