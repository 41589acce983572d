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

#ifndef XVGEO_TENSOR_H_
#define XVGEO_TENSOR_H_

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace xvgeo {

// Extents of a dense row-major array. An empty shape denotes a scalar.
using Shape = std::vector<int>;

size_t NumElements(const Shape& shape);
std::string ShapeToString(const Shape& shape);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Dense N-dimensional array of 64-bit floats.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor Scalar(double value) { return Tensor(Shape{}, value); }

  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int axis) const;
  size_t size() const { return data_.size(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  double* raw() { return data_.data(); }
  const double* raw() const { return data_.data(); }

  double& operator[](size_t i) { return data_[i]; }
  double operator[](size_t i) const { return data_[i]; }

  // Value of a single-element tensor.
  double item() const;

  // Same data, new extents; the element count must not change.
  Tensor Reshaped(Shape shape) const;

  void Fill(double value);
  // this += other (identical shapes).
  void AddInPlace(const Tensor& other);

  bool operator==(const Tensor& other) const = default;

 private:
  Shape shape_;
  // Over-aligned so that vectorized kernels see the same alignment on every
  // run; otherwise reduction order, and thus rounding, follows the heap.
  std::vector<double, Eigen::aligned_allocator<double>> data_;
};

}  // namespace xvgeo

#endif  // XVGEO_TENSOR_H_
