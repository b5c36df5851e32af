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

#include <memory>
#include <span>
#include <vector>

#include "jnrhlc/ad/tensor.hpp"
#include "jnrhlc/signal.hpp"

namespace jnrhlc::ad {

// Elementwise binary ops broadcast numpy-style (trailing dimensions aligned,
// size-1 dimensions stretched). Mismatches throw std::invalid_argument
// naming both shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
// Elementwise minimum; at ties the gradient goes to `a`.
Tensor minimum(const Tensor& a, const Tensor& b);

Tensor neg(const Tensor& a);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);

// a: [..., k], b: [k, n] -> [..., n]
Tensor matmul(const Tensor& a, const Tensor& b);

// relu'(0) = 0, abs'(0) = 0.
Tensor relu(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor abs(const Tensor& a);
Tensor square(const Tensor& a);
// |a|^c. The derivative at a == 0 is taken as 0.
Tensor pow_abs(const Tensor& a, double c);
// Non-differentiable sign(a) with sign(0) = 0, as a constant.
Tensor sign(const Tensor& a);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

Tensor reshape(const Tensor& a, Shape shape);
// out.shape[i] = a.shape[perm[i]]
Tensor permute(const Tensor& a, const std::vector<int>& perm);
Tensor slice(const Tensor& a, int axis, int start, int length);
Tensor concat(const std::vector<Tensor>& parts, int axis);

// Normalises the last axis to zero mean and unit variance (no affine part).
Tensor layer_norm(const Tensor& a, double eps = 1e-5);

// Per-row compressive nonlinearity sign(x) min(a|x|, b|x|^c) on x: [C, N].
// At the knee the linear branch's derivative is used.
Tensor broken_stick(const Tensor& x, std::span<const double> a, std::span<const double> b,
                    std::span<const double> c);

// x: [N] -> [rows, N], row r filtered by the bank's kernel r.
Tensor fir_shared(const Tensor& x, std::shared_ptr<const FirBank> bank, int rows);
// x: [rows, N] -> [rows, N]
Tensor fir_rows(const Tensor& x, std::shared_ptr<const FirBank> bank);

// x: [N] -> [2, T, F] (real part, imaginary part), same framing as jnrhlc::stft.
Tensor stft(const Tensor& x, const StftConfig& config);
// [2, T, F] -> [length], same synthesis as jnrhlc::istft. The imaginary
// parts of the DC and Nyquist bins are ignored.
Tensor istft(const Tensor& spec, const StftConfig& config, int length);

}  // namespace jnrhlc::ad
