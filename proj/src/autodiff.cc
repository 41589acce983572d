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

#include "xvgeo/autodiff.h"

#include <stdexcept>

namespace xvgeo {

Parameter& ParameterStore::Add(const std::string& name, Tensor init) {
  if (params_.count(name) > 0) {
    throw std::invalid_argument("duplicate parameter name: " + name);
  }
  auto param = std::make_unique<Parameter>();
  param->name = name;
  param->value = std::move(init);
  param->ZeroGrad();
  Parameter& ref = *param;
  params_.emplace(name, std::move(param));
  return ref;
}

Parameter& ParameterStore::Get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) {
    throw std::out_of_range("unknown parameter: " + name);
  }
  return *it->second;
}

const Parameter& ParameterStore::Get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) {
    throw std::out_of_range("unknown parameter: " + name);
  }
  return *it->second;
}

bool ParameterStore::Contains(const std::string& name) const {
  return params_.count(name) > 0;
}

std::vector<Parameter*> ParameterStore::All() {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (auto& [name, param] : params_) out.push_back(param.get());
  return out;
}

std::vector<const Parameter*> ParameterStore::All() const {
  std::vector<const Parameter*> out;
  out.reserve(params_.size());
  for (const auto& [name, param] : params_) out.push_back(param.get());
  return out;
}

size_t ParameterStore::NumScalars() const {
  size_t n = 0;
  for (const auto& [name, param] : params_) n += param->value.size();
  return n;
}

void ParameterStore::ZeroGrad() {
  for (auto& [name, param] : params_) param->ZeroGrad();
}

const Tensor& Var::value() const {
  if (tape_ == nullptr) throw std::logic_error("use of an unbound Var");
  return tape_->value(*this);
}

Var Tape::Constant(Tensor value) {
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::Param(Parameter& param) {
  auto it = param_nodes_.find(&param);
  if (it != param_nodes_.end()) return Var(this, it->second);
  Node node;
  node.value = param.value;
  node.requires_grad = true;
  node.param = &param;
  nodes_.push_back(std::move(node));
  const int id = static_cast<int>(nodes_.size()) - 1;
  param_nodes_.emplace(&param, id);
  bound_order_.push_back(&param);
  return Var(this, id);
}

Var Tape::Record(Tensor value, const std::vector<Var>& inputs,
                 BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  for (const Var& in : inputs) {
    if (in.tape_ != this) {
      throw std::logic_error("operation mixes values from different tapes");
    }
    node.requires_grad = node.requires_grad || nodes_[in.id_].requires_grad;
  }
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Tensor* Tape::GradOf(const Var& v) {
  Node& node = nodes_[v.id_];
  if (!node.requires_grad) return nullptr;
  if (!node.has_grad) {
    node.grad = Tensor(node.value.shape());
    node.has_grad = true;
  }
  return &node.grad;
}

void Tape::Backward(const Var& loss) {
  if (loss.tape_ != this) throw std::logic_error("loss belongs to another tape");
  if (value(loss).size() != 1) {
    throw ShapeError("backward requires a scalar loss, got shape " +
                     ShapeToString(value(loss).shape()));
  }
  Tensor* seed = GradOf(loss);
  if (seed == nullptr) return;  // loss does not depend on any parameter
  seed->Fill(1.0);

  for (int id = loss.id_; id >= 0; --id) {
    Node& node = nodes_[id];
    if (!node.has_grad) continue;
    if (node.backward) node.backward(*this, node.grad);
    if (node.param != nullptr) {
      if (node.param->grad.shape() != node.param->value.shape()) {
        node.param->ZeroGrad();
      }
      node.param->grad.AddInPlace(node.grad);
    }
    // Interior gradients are not needed after their record has run.
    if (node.param == nullptr) {
      node.grad = Tensor();
      node.has_grad = false;
    }
  }
}

std::vector<const Parameter*> Tape::BoundParameters() const {
  return bound_order_;
}

}  // namespace xvgeo
