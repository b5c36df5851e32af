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

#include "jnrhlc/ad/params.hpp"

#include <stdexcept>

namespace jnrhlc::ad {

void ParamSet::add(const std::string& name, Shape shape, std::vector<double> values) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
  if (numel(shape) != values.size())
    throw std::invalid_argument("parameter '" + name + "': " + std::to_string(values.size()) +
                                " values for shape " + shape_str(shape));
  names_.push_back(name);
  arrays_.emplace(name, NamedArray{std::move(shape), std::move(values)});
}

NamedArray& ParamSet::at(const std::string& name) {
  auto it = arrays_.find(name);
  if (it == arrays_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return it->second;
}

const NamedArray& ParamSet::at(const std::string& name) const {
  auto it = arrays_.find(name);
  if (it == arrays_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return it->second;
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, a] : arrays_) n += a.values.size();
  return n;
}

std::vector<double> ParamSet::flatten() const {
  std::vector<double> flat;
  flat.reserve(scalar_count());
  for (const auto& name : names_) {
    const auto& v = arrays_.at(name).values;
    flat.insert(flat.end(), v.begin(), v.end());
  }
  return flat;
}

void ParamSet::unflatten(const std::vector<double>& flat) {
  if (flat.size() != scalar_count())
    throw std::invalid_argument("unflatten: " + std::to_string(flat.size()) + " values for " +
                                std::to_string(scalar_count()) + " parameters");
  std::size_t off = 0;
  for (const auto& name : names_) {
    auto& v = arrays_.at(name).values;
    std::copy_n(flat.begin() + off, v.size(), v.begin());
    off += v.size();
  }
}

BoundParams::BoundParams(Tape& tape, const ParamSet& params, bool requires_grad) : names_(params.names()) {
  for (const auto& name : names_) {
    const auto& a = params.at(name);
    tensors_.emplace(name, tape.leaf(a.shape, a.values, requires_grad));
  }
}

const Tensor& BoundParams::operator[](const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return it->second;
}

std::vector<double> BoundParams::flat_gradient(const GradientMap& grads) const {
  std::vector<double> flat;
  for (const auto& name : names_) {
    const Tensor& t = tensors_.at(name);
    if (grads.contains(t)) {
      const auto& g = grads.at(t);
      flat.insert(flat.end(), g.begin(), g.end());
    } else {
      flat.insert(flat.end(), t.size(), 0.0);
    }
  }
  return flat;
}

}  // namespace jnrhlc::ad
