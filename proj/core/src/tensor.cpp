// Copyright 2026 The jnrhlc Authors.
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

#include "jnrhlc/ad/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace jnrhlc::ad {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw std::invalid_argument("negative dimension in shape " + shape_str(shape));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? ", " : "") << shape[i];
  os << ']';
  return os.str();
}

const Shape& Tensor::shape() const { return tape_->nodes_[id_].shape; }

int Tensor::dim(int axis) const {
  const auto& s = shape();
  if (axis < 0) axis += static_cast<int>(s.size());
  if (axis < 0 || axis >= static_cast<int>(s.size()))
    throw std::out_of_range("axis out of range for shape " + shape_str(s));
  return s[axis];
}

std::size_t Tensor::size() const { return tape_->nodes_[id_].value.size(); }

std::span<const double> Tensor::values() const { return tape_->nodes_[id_].value; }

bool Tensor::requires_grad() const { return tape_->nodes_[id_].requires_grad; }

double Tensor::item() const {
  if (size() != 1) throw std::invalid_argument("item() on tensor of shape " + shape_str(shape()));
  return values()[0];
}

const std::vector<double>& GradientMap::at(const Tensor& t) const {
  auto it = grads_.find(t.id());
  if (it == grads_.end()) throw std::out_of_range("no gradient recorded for tensor " + std::to_string(t.id()));
  return it->second;
}

Tensor Tape::leaf(Shape shape, std::vector<double> values, bool requires_grad) {
  if (numel(shape) != values.size())
    throw std::invalid_argument("leaf: " + std::to_string(values.size()) + " values for shape " + shape_str(shape));
  nodes_.push_back(Node{std::move(shape), std::move(values), requires_grad, true});
  return Tensor(this, static_cast<int>(nodes_.size() - 1));
}

Tensor Tape::record(Shape shape, std::vector<double> value, std::initializer_list<Tensor> inputs, BackwardFn fn) {
  return record(std::move(shape), std::move(value), std::vector<Tensor>(inputs), std::move(fn));
}

Tensor Tape::record(Shape shape, std::vector<double> value, const std::vector<Tensor>& inputs, BackwardFn fn) {
  bool needs_grad = false;
  for (const auto& in : inputs) {
    if (!in.valid() || &in.tape() != this) throw std::invalid_argument("op inputs belong to a different tape");
    needs_grad = needs_grad || nodes_[in.id()].requires_grad;
  }
  if (numel(shape) != value.size())
    throw std::logic_error("op produced " + std::to_string(value.size()) + " values for shape " + shape_str(shape));
  nodes_.push_back(Node{std::move(shape), std::move(value), needs_grad, false});
  const int id = static_cast<int>(nodes_.size() - 1);
  if (needs_grad) records_.push_back(Record{id, std::move(fn)});
  return Tensor(this, id);
}

std::span<double> Tape::grad_acc(int id) {
  auto& g = grads_[id];
  if (g.empty()) g.assign(nodes_[id].value.size(), 0.0);
  return g;
}

GradientMap Tape::backward(const Tensor& loss) {
  if (!loss.valid() || &loss.tape() != this) throw std::invalid_argument("backward: loss is not on this tape");
  if (loss.size() != 1)
    throw std::invalid_argument("backward: loss must be a scalar, got shape " + shape_str(loss.shape()));
  if (!std::isfinite(loss.item())) throw std::runtime_error("backward: loss is not finite");
  GradientMap out;
  if (!loss.requires_grad()) return out;
  grads_.assign(nodes_.size(), {});
  grads_[loss.id()].assign(1, 1.0);
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
    if (it->output > loss.id() || grads_[it->output].empty()) continue;
    it->fn(*this, it->output);
  }
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    const Node& n = nodes_[id];
    if (!n.leaf || !n.requires_grad) continue;
    if (grads_[id].empty()) grads_[id].assign(n.value.size(), 0.0);
    out.grads_.emplace(static_cast<int>(id), std::move(grads_[id]));
  }
  grads_.clear();
  return out;
}

void Tape::clear() {
  nodes_.clear();
  records_.clear();
  grads_.clear();
}

}  // namespace jnrhlc::ad
