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

// Cosine-similarity retrieval over unit descriptors and the Recall@K /
// average precision metrics.

#ifndef XVGEO_RETRIEVAL_H_
#define XVGEO_RETRIEVAL_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "xvgeo/view.h"

namespace xvgeo {

struct Descriptor {
  uint32_t id = 0;  // instance (class) id
  View view = View::kDrone;
  std::vector<double> values;
};

class DescriptorIndex {
 public:
  DescriptorIndex() = default;

  int dim() const { return dim_; }
  size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<Descriptor>& entries() const { return entries_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  friend DescriptorIndex BuildIndex(std::vector<Descriptor> descriptors);

  int dim_ = 0;
  std::vector<Descriptor> entries_;
  std::vector<std::string> warnings_;
};

// Normalizes every vector to unit length; a warning is recorded when an
// input norm is off by more than 1e-3. Throws std::invalid_argument on
// mixed dimensions, zero or non-finite vectors.
DescriptorIndex BuildIndex(std::vector<Descriptor> descriptors);

struct RankedItem {
  uint32_t id = 0;
  size_t entry = 0;  // position in the index
  double similarity = 0.0;
};

// Top-k entries by descending dot product; ties go to the smaller id, then
// the earlier entry.
std::vector<RankedItem> Rank(const DescriptorIndex& index,
                             std::span<const double> query, size_t k);

// Fraction of queries with a relevant id among the first k ranked ids.
// Throws std::invalid_argument if a query has no relevant ids.
double RecallAtK(const std::vector<std::vector<uint32_t>>& rankings,
                 const std::vector<std::set<uint32_t>>& relevant, size_t k);

// Mean of precision@r over the ranks r holding relevant items, divided by
// the number of relevant items. `relevant` holds entry positions in
// `ranking`'s index, so repeated ids are counted separately.
double AveragePrecision(const std::vector<size_t>& ranking,
                        const std::set<size_t>& relevant);
double MeanAveragePrecision(const std::vector<std::vector<size_t>>& rankings,
                            const std::vector<std::set<size_t>>& relevant);

struct TaskMetrics {
  std::string task;  // e.g. "drone->satellite"
  size_t num_queries = 0;
  size_t gallery_size = 0;
  std::map<int, double> recall;  // K -> R@K
  double mean_ap = 0.0;
};

// Queries and gallery entries match when their ids agree. Every query id
// must be present in the gallery.
TaskMetrics EvaluateRetrieval(const std::string& task,
                              const std::vector<Descriptor>& queries,
                              const DescriptorIndex& gallery,
                              const std::vector<int>& ks);

std::string FormatMetricsTable(const std::vector<TaskMetrics>& metrics);
// Columns: task,metric,value with metric "R@K" or "AP".
void WriteMetricsCsv(const std::filesystem::path& path,
                     const std::vector<TaskMetrics>& metrics);

// Binary descriptor file: "JRNG", u32 version, u32 count, u32 dim, then per
// entry u32 id, u8 view, f32[dim]; little-endian.
void WriteDescriptors(const std::filesystem::path& path,
                      const std::vector<Descriptor>& descriptors);
std::vector<Descriptor> ReadDescriptors(const std::filesystem::path& path);

}  // namespace xvgeo

#endif  // XVGEO_RETRIEVAL_H_
