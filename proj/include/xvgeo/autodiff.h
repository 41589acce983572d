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

// Tape-based reverse-mode differentiation.
//
// A Tape records every operation of one forward pass in execution order.
// Values produced on the tape are addressed through lightweight Var handles.
// Tape::Backward walks the records in reverse, calling each record's
// backward function once, and finally adds the gradients of bound
// parameters into Parameter::grad.

#ifndef XVGEO_AUTODIFF_H_
#define XVGEO_AUTODIFF_H_

#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "xvgeo/tensor.h"

namespace xvgeo {

// A named learnable tensor with its accumulated gradient.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  void ZeroGrad() { grad = Tensor(value.shape()); }
};

// Owns the parameters of a model. Names are unique; iteration is in
// lexicographic name order so that serialization is deterministic.
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore&) = delete;
  ParameterStore& operator=(const ParameterStore&) = delete;
  ParameterStore(ParameterStore&&) = default;
  ParameterStore& operator=(ParameterStore&&) = default;

  Parameter& Add(const std::string& name, Tensor init);
  Parameter& Get(const std::string& name);
  const Parameter& Get(const std::string& name) const;
  bool Contains(const std::string& name) const;

  std::vector<Parameter*> All();
  std::vector<const Parameter*> All() const;

  size_t size() const { return params_.size(); }
  size_t NumScalars() const;
  void ZeroGrad();

 private:
  std::map<std::string, std::unique_ptr<Parameter>> params_;
};

class Tape;

// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  // Receives the gradient of the record's output. Implementations push
  // gradients to their inputs through GradOf().
  using BackwardFn = std::function<void(Tape& tape, const Tensor& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var Constant(Tensor value);
  // Binds a parameter. Binding the same parameter twice returns the same
  // node, so all uses share one gradient slot.
  Var Param(Parameter& param);
  // Appends an operation record. `backward` is dropped when no input
  // requires a gradient.
  Var Record(Tensor value, const std::vector<Var>& inputs, BackwardFn backward);

  const Tensor& value(const Var& v) const { return nodes_[v.id_].value; }
  bool requires_grad(const Var& v) const { return nodes_[v.id_].requires_grad; }

  // Gradient accumulator of `v`, allocated on first use. Returns nullptr
  // when `v` does not require a gradient.
  Tensor* GradOf(const Var& v);

  // Reverse sweep from a scalar loss.
  void Backward(const Var& loss);

  size_t size() const { return nodes_.size(); }
  // Parameters bound to this tape, in binding order.
  std::vector<const Parameter*> BoundParameters() const;

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool has_grad = false;
    Parameter* param = nullptr;
    BackwardFn backward;
  };

  std::deque<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_nodes_;
  std::vector<const Parameter*> bound_order_;
};

}  // namespace xvgeo

#endif  // XVGEO_AUTODIFF_H_
