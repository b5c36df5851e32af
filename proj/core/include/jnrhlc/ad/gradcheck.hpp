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
#include <functional>
#include <span>
#include <vector>

#include "jnrhlc/ad/tensor.hpp"

namespace jnrhlc::ad {

struct GradCheckOptions {
  double eps = 1e-5;
  // Inputs larger than this are probed along random unit directions instead
  // of coordinate by coordinate.
  std::size_t max_coordinates = 256;
  int directions = 24;
  std::uint64_t seed = 1;
  // Gradients smaller than this in both estimates count as agreeing.
  double abs_floor = 1e-10;
  // One-sided differences disagreeing by more than
  // max(kink_rel * slope, kink_abs) mark a nondifferentiable point.
  double kink_rel = 0.1;
  double kink_abs = 1e-3;
  // Each probe is repeated at eps * scale for every entry and the smallest
  // error kept. A second, finer step catches kinks too small for the
  // one-sided test to see; a wrong gradient fails at every step.
  std::vector<double> step_scales{1.0};
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t excluded = 0;  // points sitting on a kink
  std::size_t worst = 0;     // coordinate or direction index
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// Builds a scalar from the leaf `x` on the supplied (fresh) tape.
using ScalarFn = std::function<Tensor(Tape&, const Tensor&)>;

// Compares the tape gradient of f at x with central differences, relative
// error per coordinate (or per direction for large inputs).
GradCheckReport gradient_check(const ScalarFn& f, const Shape& shape, std::span<const double> x,
                               const GradCheckOptions& options = {});

// Flat-vector objective: returns f(theta) and, when `grad` is non-null, fills
// it with the gradient.
using FlatObjective = std::function<double(std::span<const double> theta, std::vector<double>* grad)>;

// Directional derivatives along `options.directions` random unit vectors.
// Errors are relative to max(|analytic|, |numeric|, |g| / sqrt(n)), as for
// the directional mode of gradient_check.
GradCheckReport directional_check(const FlatObjective& f, std::span<const double> theta,
                                  const GradCheckOptions& options = {});

}  // namespace jnrhlc::ad
