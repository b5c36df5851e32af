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

#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace jnrhlc::ad {

using Shape = std::vector<int>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class Tape;

// Lightweight handle to a value recorded on a Tape. Copying a Tensor copies
// the handle, not the data. A Tensor is only valid while its Tape has not
// been cleared.
class Tensor {
 public:
  Tensor() = default;

  bool valid() const { return tape_ != nullptr; }
  int id() const { return id_; }
  Tape& tape() const { return *tape_; }

  const Shape& shape() const;
  int rank() const { return static_cast<int>(shape().size()); }
  int dim(int axis) const;
  std::size_t size() const;
  std::span<const double> values() const;
  bool requires_grad() const;
  // Value of a single-element tensor.
  double item() const;

 private:
  friend class Tape;
  Tensor(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Gradients of a scalar with respect to every leaf created with
// requires_grad == true. Non-differentiable nodes never appear here.
class GradientMap {
 public:
  bool contains(const Tensor& t) const { return grads_.count(t.id()) != 0; }
  const std::vector<double>& at(const Tensor& t) const;
  std::size_t size() const { return grads_.size(); }
  const std::map<int, std::vector<double>>& entries() const { return grads_; }

 private:
  friend class Tape;
  std::map<int, std::vector<double>> grads_;
};

// Reverse-mode tape. Nodes are appended in evaluation order, so every input
// id is smaller than the id of its consumer. Owned by one thread at a time.
class Tape {
 public:
  // Called with the tape and the id of the node the record produced.
  using BackwardFn = std::function<void(Tape&, int)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Tensor leaf(Shape shape, std::vector<double> values, bool requires_grad = true);
  Tensor constant(Shape shape, std::vector<double> values) { return leaf(std::move(shape), std::move(values), false); }
  Tensor scalar(double v, bool requires_grad = false) { return leaf({}, {v}, requires_grad); }
  Tensor zeros(Shape shape) {
    auto n = numel(shape);
    return constant(std::move(shape), std::vector<double>(n, 0.0));
  }

  // Throws if `loss` is not a single element or is not finite.
  GradientMap backward(const Tensor& loss);

  // Drops every node. Outstanding Tensor handles become invalid.
  void clear();

  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_records() const { return records_.size(); }

  // --- Interface for operation implementations ---------------------------

  // Appends an op result. A backward record is kept only when at least one
  // input requires a gradient; the returned tensor inherits that flag.
  Tensor record(Shape shape, std::vector<double> value, std::initializer_list<Tensor> inputs, BackwardFn fn);
  Tensor record(Shape shape, std::vector<double> value, const std::vector<Tensor>& inputs, BackwardFn fn);

  std::span<const double> value(int id) const { return nodes_[id].value; }
  const Shape& shape(int id) const { return nodes_[id].shape; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }

  // Valid during backward(). grad() is the upstream gradient of a node (empty
  // if nothing flowed into it); grad_acc() is the accumulator of an input,
  // zero-initialised on first use.
  std::span<const double> grad(int id) const { return grads_[id]; }
  std::span<double> grad_acc(int id);

 private:
  friend class Tensor;
  struct Node {
    Shape shape;
    std::vector<double> value;
    bool requires_grad = false;
    bool leaf = false;
  };
  struct Record {
    int output;
    BackwardFn fn;
  };

  std::deque<Node> nodes_;
  std::vector<Record> records_;
  std::vector<std::vector<double>> grads_;
};

}  // namespace jnrhlc::ad
