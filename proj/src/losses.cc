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

#include "xvgeo/losses.h"

#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <stdexcept>

#include "xvgeo/ops.h"

namespace xvgeo {

void BatchLabels::Validate() const {
  if (class_id.size() != view.size()) {
    throw std::invalid_argument("batch labels: class and view counts differ");
  }
  struct Seen {
    int count = 0;
    bool drone = false;
    bool satellite = false;
  };
  std::map<int, Seen> seen;
  for (size_t i = 0; i < class_id.size(); ++i) {
    Seen& s = seen[class_id[i]];
    ++s.count;
    (view[i] == View::kDrone ? s.drone : s.satellite) = true;
  }
  for (const auto& [cls, s] : seen) {
    if (s.count < 2 || !s.drone || !s.satellite) {
      throw std::invalid_argument(
          "batch labels: class " + std::to_string(cls) +
          " needs at least two samples spanning both views");
    }
  }
  if (seen.size() < 2) {
    throw std::invalid_argument("batch labels: need at least two classes");
  }
}

Var TripletLoss(const Var& embeddings, const BatchLabels& labels,
                double margin) {
  if (!(margin > 0.0)) throw std::invalid_argument("triplet: margin must be > 0");
  labels.Validate();
  const Tensor& v = embeddings.value();
  if (v.rank() != 2 || v.dim(0) != static_cast<int>(labels.size())) {
    throw ShapeError("triplet: embeddings " + ShapeToString(v.shape()) +
                     " do not match " + std::to_string(labels.size()) +
                     " labels");
  }
  const int n = v.dim(0), dim = v.dim(1);
  std::vector<double> dist(static_cast<size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double sq = 0.0;
      for (int k = 0; k < dim; ++k) {
        const double diff = v[i * dim + k] - v[j * dim + k];
        sq += diff * diff;
      }
      dist[i * n + j] = dist[j * n + i] = std::sqrt(sq);
    }
  }

  // (anchor, positive, negative) for anchors with an active hinge.
  struct Active {
    int anchor, positive, negative;
    double d_pos, d_neg;
  };
  auto active = std::make_shared<std::vector<Active>>();
  double loss = 0.0;
  for (int a = 0; a < n; ++a) {
    int pos = -1, neg = -1;
    double d_pos = -1.0, d_neg = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      if (j == a) continue;
      const double d = dist[a * n + j];
      if (labels.class_id[j] == labels.class_id[a]) {
        if (labels.view[j] != labels.view[a] && d > d_pos) {
          d_pos = d;
          pos = j;
        }
      } else if (d < d_neg) {
        d_neg = d;
        neg = j;
      }
    }
    const double hinge = margin + d_pos - d_neg;
    if (hinge > 0.0) {
      loss += hinge;
      active->push_back({a, pos, neg, d_pos, d_neg});
    }
  }

  return embeddings.tape()->Record(
      Tensor::Scalar(loss / n), {embeddings},
      [embeddings, active, n, dim](Tape& t, const Tensor& g) {
        Tensor* gv = t.GradOf(embeddings);
        const Tensor& v = t.value(embeddings);
        const double scale = g[0] / n;
        // d|x_i - x_j| / dx_i = (x_i - x_j) / |x_i - x_j|; zero at a tie.
        auto push = [&](int i, int j, double d, double sign) {
          if (d <= 0.0) return;
          for (int k = 0; k < dim; ++k) {
            const double u = (v[i * dim + k] - v[j * dim + k]) / d;
            (*gv)[i * dim + k] += sign * scale * u;
            (*gv)[j * dim + k] -= sign * scale * u;
          }
        };
        for (const Active& a : *active) {
          push(a.anchor, a.positive, a.d_pos, 1.0);
          push(a.anchor, a.negative, a.d_neg, -1.0);
        }
      });
}

Var CrossEntropyLoss(const Var& logits_rgb, const Var& logits_normal,
                     const BatchLabels& labels) {
  const Var rgb = SoftmaxCrossEntropy(logits_rgb, labels.class_id);
  const Var normal = SoftmaxCrossEntropy(logits_normal, labels.class_id);
  return Scale(Add(rgb, normal), 0.5);
}

Var TotalLoss(const Var& triplet, const Var& cross_entropy) {
  const double a = triplet.value().item();
  const double b = cross_entropy.value().item();
  if (!std::isfinite(a) || !std::isfinite(b)) {
    throw std::domain_error("total loss: non-finite component (triplet=" +
                            std::to_string(a) + ", ce=" + std::to_string(b) +
                            ")");
  }
  return Add(triplet, cross_entropy);
}

LossBreakdown ModelLoss(const ModelOutput& out, const BatchLabels& labels,
                        double margin) {
  LossBreakdown loss;
  if (out.vector_normal.valid()) {
    loss.triplet = Scale(Add(TripletLoss(out.vector_rgb, labels, margin),
                             TripletLoss(out.vector_normal, labels, margin)),
                         0.5);
    loss.cross_entropy =
        CrossEntropyLoss(out.logits_rgb, out.logits_normal, labels);
  } else {
    loss.triplet = TripletLoss(out.vector_rgb, labels, margin);
    loss.cross_entropy = SoftmaxCrossEntropy(out.logits_rgb, labels.class_id);
  }
  loss.total = TotalLoss(loss.triplet, loss.cross_entropy);
  return loss;
}

}  // namespace xvgeo
