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

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "jnrhlc/ad/tensor.hpp"

namespace jnrhlc::ad {

struct NamedArray {
  Shape shape;
  std::vector<double> values;

  bool operator==(const NamedArray&) const = default;
};

// Ordered collection of named trainable arrays.
class ParamSet {
 public:
  void add(const std::string& name, Shape shape, std::vector<double> values);
  bool contains(const std::string& name) const { return arrays_.count(name) != 0; }
  NamedArray& at(const std::string& name);
  const NamedArray& at(const std::string& name) const;

  // Insertion order, which is also the order of flatten()/unflatten().
  const std::vector<std::string>& names() const { return names_; }
  std::size_t scalar_count() const;

  std::vector<double> flatten() const;
  void unflatten(const std::vector<double>& flat);

  bool operator==(const ParamSet& other) const { return names_ == other.names_ && arrays_ == other.arrays_; }

 private:
  std::vector<std::string> names_;
  std::map<std::string, NamedArray> arrays_;
};

// Leaves for every parameter of a set on one tape.
class BoundParams {
 public:
  BoundParams(Tape& tape, const ParamSet& params, bool requires_grad);

  const Tensor& operator[](const std::string& name) const;
  const std::map<std::string, Tensor>& tensors() const { return tensors_; }

  // Gradients in ParamSet::names() order, concatenated. Parameters absent
  // from `grads` contribute zeros.
  std::vector<double> flat_gradient(const GradientMap& grads) const;

 private:
  std::vector<std::string> names_;
  std::map<std::string, Tensor> tensors_;
};

}  // namespace jnrhlc::ad
