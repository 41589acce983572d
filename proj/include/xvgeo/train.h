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

// Dataset loading, batch sampling, SGD training and embedding for the
// dual-branch model.

#ifndef XVGEO_TRAIN_H_
#define XVGEO_TRAIN_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "xvgeo/grad_check.h"
#include "xvgeo/image.h"
#include "xvgeo/losses.h"
#include "xvgeo/model.h"
#include "xvgeo/retrieval.h"
#include "xvgeo/tensor.h"
#include "xvgeo/view.h"

namespace xvgeo {

// One RGB + normal pair, both [3, H, W] scaled to [-1, 1].
struct Sample {
  uint32_t class_id = 0;  // numeric class directory name
  View view = View::kDrone;
  std::string path;       // the RGB file
  Tensor rgb;
  Tensor normal;
};

// Loads <root>/<split>/<view>/<class>/<index>.png and <index>_normal.png
// for both views (a missing view directory is skipped), resized to
// height x width. Samples are ordered by view, class and file name.
std::vector<Sample> LoadSplit(const std::filesystem::path& root,
                              const std::string& split, int height, int width);

// RGB file converted to [3, H, W] with v / 127.5 - 1.
Tensor ImageToTensor(const Image& image);

struct Batch {
  Tensor rgb;     // [N, 3, H, W]
  Tensor normal;
  BatchLabels labels;  // labels are dense indices, see BatchSampler
};

// Draws P classes without replacement and S samples per view of each class
// with replacement, so every class has both views in the batch.
class BatchSampler {
 public:
  BatchSampler(const std::vector<Sample>& samples, int classes_per_batch,
               int samples_per_view, uint64_t seed);

  Batch Next();
  int num_classes() const { return static_cast<int>(class_ids_.size()); }
  // Original class id of dense label i.
  uint32_t class_id(int label) const { return class_ids_[label]; }

 private:
  const std::vector<Sample>& samples_;
  int classes_per_batch_;
  int samples_per_view_;
  std::mt19937_64 rng_;
  std::vector<uint32_t> class_ids_;
  // pools_[label][view] lists sample positions.
  std::vector<std::array<std::vector<size_t>, 2>> pools_;
};

// Stacks sample tensors [3,H,W] into [N,3,H,W].
Batch Stack(const std::vector<const Sample*>& samples);

struct TrainOptions {
  int steps = 2000;
  double learning_rate = 0.001;
  double momentum = 0.9;
  double margin = kDefaultMargin;
  int classes_per_batch = 8;
  int samples_per_view = 2;
  uint64_t seed = 0;

  void Validate() const;
};

// p <- p - lr * v with v <- momentum * v + grad.
class SgdMomentum {
 public:
  SgdMomentum(ParameterStore& params, double learning_rate, double momentum);
  void Step();

 private:
  std::vector<Parameter*> params_;
  std::vector<Tensor> velocity_;
  double learning_rate_;
  double momentum_;
};

struct StepLog {
  int step = 0;
  double triplet = 0.0;
  double cross_entropy = 0.0;
  double total = 0.0;
};

// Runs options.steps SGD steps on `train`. The callback sees every step.
// Throws std::runtime_error on a non-finite loss, naming the step.
std::vector<StepLog> Train(DualBranchModel& model,
                           const std::vector<Sample>& train,
                           const TrainOptions& options,
                           const std::function<void(const StepLog&)>& on_step = {});

// Unit joint descriptors for `samples`, embedded in chunks of batch_size.
std::vector<Descriptor> EmbedSamples(const DualBranchModel& model,
                                     const std::vector<Sample>& samples,
                                     int batch_size = 32);

// Finite-difference check of the total training loss against every model
// parameter on a random batch of 2 classes x 2 views. Fusion gates use a
// coarser step (1e-3) than the convolution and linear weights (1e-5); their
// gradients are small enough that the finer step drowns in roundoff.
GradCheckReport CheckModelGradients(DualBranchModel& model,
                                    int entries_per_parameter, uint64_t seed);

// Splits descriptors into drone queries and a satellite gallery and
// evaluates both retrieval directions at K = 1, 5, 10.
struct CrossViewMetrics {
  TaskMetrics drone_to_satellite;
  TaskMetrics satellite_to_drone;
};
CrossViewMetrics EvaluateCrossView(const std::vector<Descriptor>& drone,
                                   const std::vector<Descriptor>& satellite);

}  // namespace xvgeo

#endif  // XVGEO_TRAIN_H_
