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

#include <optional>
#include <span>
#include <string>

#include "jnrhlc/ad/tensor.hpp"
#include "jnrhlc/auditory_model.hpp"
#include "jnrhlc/signal.hpp"

namespace jnrhlc {

enum class LossKind { MSE, MAE };

std::string loss_kind_name(LossKind k);
// "mse" or "mae" (case-insensitive).
LossKind parse_loss_kind(const std::string& s);

// Mean squared or mean absolute difference over all elements.
ad::Tensor ell(const ad::Tensor& p, const ad::Tensor& q, LossKind kind);

// ell(A(estimate, a), target) against a precomputed representation; the
// target enters the tape as a constant.
ad::Tensor representation_loss(const AuditoryModel& model, const ad::Tensor& estimate, const std::optional<Audiogram>& a,
                               std::span<const double> target, LossKind kind);

// Noise reduction: ell(A_NH(y_nr), A_NH(y)).
ad::Tensor loss_nr(const AuditoryModel& model, const ad::Tensor& y_nr, const ad::Tensor& y, LossKind kind);
// Compensation: ell(A_HI(y_hlc, a), A_NH(x)), the target being the noisy input.
ad::Tensor loss_hlc(const AuditoryModel& model, const ad::Tensor& y_hlc, const ad::Tensor& x, const Audiogram& a,
                    LossKind kind);
// Joint single-term objective: ell(A_HI(y_hat, a), A_NH(y)).
ad::Tensor loss_joint(const AuditoryModel& model, const ad::Tensor& y_hat, const ad::Tensor& y, const Audiogram& a,
                      LossKind kind);

// l_nr e^-u_nr + u_nr + l_hlc e^-u_hlc + u_hlc, all scalars.
ad::Tensor loss_controllable(const ad::Tensor& l_nr, const ad::Tensor& l_hlc, const ad::Tensor& u_nr,
                             const ad::Tensor& u_hlc);

inline constexpr double kSdrCapDb = 60.0;

// 10 log10(|y|^2 / |y - y_hat|^2), clamped to [-60, 60] dB. Throws
// std::invalid_argument on a length mismatch or an all-zero reference.
double sdr(std::span<const double> reference, std::span<const double> estimate);
double sdr(const AudioSignal& reference, const AudioSignal& estimate);

// Negative SDR on the tape, the error energy floored at 1e-10 |y|^2 so that
// a perfect estimate gives -100 dB instead of -inf.
ad::Tensor sdr_loss(std::span<const double> reference, const ad::Tensor& estimate);

// alpha y_nr + (1 - alpha) y_hlc; alpha 1 and 0 return exact copies.
std::vector<double> mix_outputs(std::span<const double> y_nr, std::span<const double> y_hlc, double alpha);
AudioSignal mix_outputs(const AudioSignal& y_nr, const AudioSignal& y_hlc, double alpha);

}  // namespace jnrhlc
