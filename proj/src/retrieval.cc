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

#include "xvgeo/retrieval.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "binary_io.h"

namespace xvgeo {
namespace {

constexpr char kMagic[4] = {'J', 'R', 'N', 'G'};
constexpr uint32_t kVersion = 1;

double Dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

bool RanksBefore(const RankedItem& a, const RankedItem& b) {
  if (a.similarity != b.similarity) return a.similarity > b.similarity;
  if (a.id != b.id) return a.id < b.id;
  return a.entry < b.entry;
}

}  // namespace

DescriptorIndex BuildIndex(std::vector<Descriptor> descriptors) {
  DescriptorIndex index;
  if (descriptors.empty()) return index;
  index.dim_ = static_cast<int>(descriptors.front().values.size());
  if (index.dim_ == 0) throw std::invalid_argument("empty descriptor vector");
  for (size_t i = 0; i < descriptors.size(); ++i) {
    auto& v = descriptors[i].values;
    if (static_cast<int>(v.size()) != index.dim_) {
      throw std::invalid_argument(
          "descriptor " + std::to_string(i) + " has dimension " +
          std::to_string(v.size()) + ", expected " + std::to_string(index.dim_));
    }
    const double norm = std::sqrt(Dot(v, v));
    if (!std::isfinite(norm)) {
      throw std::invalid_argument("descriptor " + std::to_string(i) +
                                  " is not finite");
    }
    if (!(norm > 0.0)) {
      throw std::invalid_argument("descriptor " + std::to_string(i) +
                                  " is the zero vector");
    }
    if (std::abs(norm - 1.0) > 1e-3) {
      index.warnings_.push_back("descriptor " + std::to_string(i) + " (id " +
                                std::to_string(descriptors[i].id) +
                                ") had norm " + std::to_string(norm) +
                                "; renormalized");
    }
    for (double& x : v) x /= norm;
  }
  index.entries_ = std::move(descriptors);
  return index;
}

std::vector<RankedItem> Rank(const DescriptorIndex& index,
                             std::span<const double> query, size_t k) {
  if (k < 1) throw std::invalid_argument("rank: k must be >= 1");
  if (!index.empty() && static_cast<int>(query.size()) != index.dim()) {
    throw std::invalid_argument("rank: query has dimension " +
                                std::to_string(query.size()) + ", index has " +
                                std::to_string(index.dim()));
  }
  std::vector<RankedItem> items(index.size());
  for (size_t i = 0; i < index.size(); ++i) {
    const Descriptor& d = index.entries()[i];
    items[i] = {d.id, i, Dot(query, d.values)};
  }
  const size_t top = std::min(k, items.size());
  std::partial_sort(items.begin(), items.begin() + top, items.end(),
                    RanksBefore);
  items.resize(top);
  return items;
}

double RecallAtK(const std::vector<std::vector<uint32_t>>& rankings,
                 const std::vector<std::set<uint32_t>>& relevant, size_t k) {
  if (rankings.size() != relevant.size()) {
    throw std::invalid_argument("recall: rankings and ground truth differ in size");
  }
  if (rankings.empty()) throw std::invalid_argument("recall: no queries");
  size_t hits = 0;
  for (size_t q = 0; q < rankings.size(); ++q) {
    if (relevant[q].empty()) {
      throw std::invalid_argument("recall: query " + std::to_string(q) +
                                  " has no ground truth");
    }
    const size_t n = std::min(k, rankings[q].size());
    for (size_t r = 0; r < n; ++r) {
      if (relevant[q].count(rankings[q][r])) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(rankings.size());
}

double AveragePrecision(const std::vector<size_t>& ranking,
                        const std::set<size_t>& relevant) {
  if (relevant.empty()) {
    throw std::invalid_argument("average precision: empty relevant set");
  }
  double sum = 0.0;
  size_t found = 0;
  for (size_t r = 0; r < ranking.size(); ++r) {
    if (relevant.count(ranking[r])) {
      ++found;
      sum += static_cast<double>(found) / static_cast<double>(r + 1);
    }
  }
  return sum / static_cast<double>(relevant.size());
}

double MeanAveragePrecision(const std::vector<std::vector<size_t>>& rankings,
                            const std::vector<std::set<size_t>>& relevant) {
  if (rankings.size() != relevant.size() || rankings.empty()) {
    throw std::invalid_argument("mean AP: need one relevant set per query");
  }
  double sum = 0.0;
  for (size_t q = 0; q < rankings.size(); ++q) {
    sum += AveragePrecision(rankings[q], relevant[q]);
  }
  return sum / static_cast<double>(rankings.size());
}

TaskMetrics EvaluateRetrieval(const std::string& task,
                              const std::vector<Descriptor>& queries,
                              const DescriptorIndex& gallery,
                              const std::vector<int>& ks) {
  TaskMetrics m;
  m.task = task;
  m.num_queries = queries.size();
  m.gallery_size = gallery.size();
  if (queries.empty()) throw std::invalid_argument(task + ": no queries");
  std::map<uint32_t, std::set<size_t>> by_id;
  for (size_t i = 0; i < gallery.size(); ++i) {
    by_id[gallery.entries()[i].id].insert(i);
  }
  std::vector<std::vector<uint32_t>> ranked_ids;
  std::vector<std::vector<size_t>> ranked_entries;
  std::vector<std::set<uint32_t>> relevant_ids;
  std::vector<std::set<size_t>> relevant_entries;
  for (const Descriptor& q : queries) {
    auto it = by_id.find(q.id);
    if (it == by_id.end()) {
      throw std::invalid_argument(task + ": query id " + std::to_string(q.id) +
                                  " has no match in the gallery");
    }
    const auto ranked = Rank(gallery, q.values, gallery.size());
    std::vector<uint32_t> ids;
    std::vector<size_t> entries;
    for (const RankedItem& item : ranked) {
      ids.push_back(item.id);
      entries.push_back(item.entry);
    }
    ranked_ids.push_back(std::move(ids));
    ranked_entries.push_back(std::move(entries));
    relevant_ids.push_back({q.id});
    relevant_entries.push_back(it->second);
  }
  for (int k : ks) {
    if (k < 1) throw std::invalid_argument("recall K must be >= 1");
    m.recall[k] = RecallAtK(ranked_ids, relevant_ids, k);
  }
  m.mean_ap = MeanAveragePrecision(ranked_entries, relevant_entries);
  return m;
}

std::string FormatMetricsTable(const std::vector<TaskMetrics>& metrics) {
  std::ostringstream out;
  char buf[64];
  for (const TaskMetrics& m : metrics) {
    out << m.task << " (" << m.num_queries << " queries, " << m.gallery_size
        << " gallery)\n";
    for (const auto& [k, value] : m.recall) {
      std::snprintf(buf, sizeof(buf), "  R@%-4d %7.2f%%\n", k, 100.0 * value);
      out << buf;
    }
    std::snprintf(buf, sizeof(buf), "  AP     %7.2f%%\n", 100.0 * m.mean_ap);
    out << buf;
  }
  return out.str();
}

void WriteMetricsCsv(const std::filesystem::path& path,
                     const std::vector<TaskMetrics>& metrics) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "task,metric,value\n";
  char buf[32];
  for (const TaskMetrics& m : metrics) {
    for (const auto& [k, value] : m.recall) {
      std::snprintf(buf, sizeof(buf), "%.6f", value);
      out << m.task << ",R@" << k << ',' << buf << '\n';
    }
    std::snprintf(buf, sizeof(buf), "%.6f", m.mean_ap);
    out << m.task << ",AP," << buf << '\n';
  }
}

void WriteDescriptors(const std::filesystem::path& path,
                      const std::vector<Descriptor>& descriptors) {
  const uint32_t dim =
      descriptors.empty() ? 0 : static_cast<uint32_t>(descriptors[0].values.size());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(kMagic, 4);
  internal::WriteLE<uint32_t>(out, kVersion);
  internal::WriteLE<uint32_t>(out, static_cast<uint32_t>(descriptors.size()));
  internal::WriteLE<uint32_t>(out, dim);
  for (const Descriptor& d : descriptors) {
    if (d.values.size() != dim) {
      throw std::invalid_argument("descriptors differ in dimension");
    }
    internal::WriteLE<uint32_t>(out, d.id);
    internal::WriteLE<uint8_t>(out, static_cast<uint8_t>(d.view));
    for (double v : d.values) internal::WriteF32(out, static_cast<float>(v));
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<Descriptor> ReadDescriptors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kMagic)) {
    throw std::runtime_error(path.string() + ": not a descriptor file");
  }
  const std::string what = path.string();
  const uint32_t version = internal::ReadLE<uint32_t>(in, what);
  if (version != kVersion) {
    throw std::runtime_error(what + ": unsupported version " +
                             std::to_string(version));
  }
  const uint32_t count = internal::ReadLE<uint32_t>(in, what);
  const uint32_t dim = internal::ReadLE<uint32_t>(in, what);
  std::vector<Descriptor> out(count);
  for (Descriptor& d : out) {
    d.id = internal::ReadLE<uint32_t>(in, what);
    const uint8_t view = internal::ReadLE<uint8_t>(in, what);
    if (view > 1) {
      throw std::runtime_error(what + ": bad view code " + std::to_string(view));
    }
    d.view = static_cast<View>(view);
    d.values.resize(dim);
    for (double& v : d.values) v = internal::ReadF32(in, what);
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw std::runtime_error(what + ": trailing bytes");
  }
  return out;
}

}  // namespace xvgeo
