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

#include "jnrhlc/objectives.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "jnrhlc/ad/ops.hpp"

namespace jnrhlc {

std::string loss_kind_name(LossKind k) { return k == LossKind::MSE ? "mse" : "mae"; }

LossKind parse_loss_kind(const std::string& s) {
  std::string l = s;
  std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (l == "mse") return LossKind::MSE;
  if (l == "mae") return LossKind::MAE;
  throw std::invalid_argument("unknown loss '" + s + "' (expected mse or mae)");
}

ad::Tensor ell(const ad::Tensor& p, const ad::Tensor& q, LossKind kind) {
  if (p.shape() != q.shape())
    throw std::invalid_argument("loss: shape mismatch " + ad::shape_str(p.shape()) + " vs " + ad::shape_str(q.shape()));
  const auto d = ad::sub(p, q);
  return ad::mean(kind == LossKind::MSE ? ad::square(d) : ad::abs(d));
}

ad::Tensor representation_loss(const AuditoryModel& model, const ad::Tensor& estimate, const std::optional<Audiogram>& a,
                               std::span<const double> target, LossKind kind) {
  const auto rep = model.run(estimate, a);
  if (target.size() != rep.size()) throw std::invalid_argument("representation_loss: target size mismatch");
  const auto t = estimate.tape().constant(rep.shape(), std::vector<double>(target.begin(), target.end()));
  return ell(rep, t, kind);
}

namespace {

std::vector<double> constant_representation(const AuditoryModel& model, const ad::Tensor& signal) {
  // Evaluated on a scratch tape so no gradient reaches the target.
  ad::Tape scratch;
  const auto x = scratch.constant(signal.shape(), std::vector<double>(signal.values().begin(), signal.values().end()));
  const auto rep = model.run(x, std::nullopt);
  return {rep.values().begin(), rep.values().end()};
}

}  // namespace

ad::Tensor loss_nr(const AuditoryModel& model, const ad::Tensor& y_nr, const ad::Tensor& y, LossKind kind) {
  return representation_loss(model, y_nr, std::nullopt, constant_representation(model, y), kind);
}

ad::Tensor loss_hlc(const AuditoryModel& model, const ad::Tensor& y_hlc, const ad::Tensor& x, const Audiogram& a,
                    LossKind kind) {
  return representation_loss(model, y_hlc, a, constant_representation(model, x), kind);
}

ad::Tensor loss_joint(const AuditoryModel& model, const ad::Tensor& y_hat, const ad::Tensor& y, const Audiogram& a,
                      LossKind kind) {
  return representation_loss(model, y_hat, a, constant_representation(model, y), kind);
}

ad::Tensor loss_controllable(const ad::Tensor& l_nr, const ad::Tensor& l_hlc, const ad::Tensor& u_nr,
                             const ad::Tensor& u_hlc) {
  for (const auto* t : {&l_nr, &l_hlc, &u_nr, &u_hlc})
    if (t->size() != 1) throw std::invalid_argument("loss_controllable: scalar inputs expected");
  const auto nr = ad::add(ad::mul(l_nr, ad::exp(ad::neg(u_nr))), u_nr);
  const auto hlc = ad::add(ad::mul(l_hlc, ad::exp(ad::neg(u_hlc))), u_hlc);
  return ad::add(nr, hlc);
}

double sdr(std::span<const double> reference, std::span<const double> estimate) {
  if (reference.size() != estimate.size()) throw std::invalid_argument("sdr: length mismatch");
  double sig = 0.0, err = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    sig += reference[i] * reference[i];
    const double d = reference[i] - estimate[i];
    err += d * d;
  }
  if (!(sig > 0.0)) throw std::invalid_argument("sdr: reference is all zero");
  if (err == 0.0) return kSdrCapDb;
  return std::clamp(10.0 * std::log10(sig / err), -kSdrCapDb, kSdrCapDb);
}

double sdr(const AudioSignal& reference, const AudioSignal& estimate) { return sdr(reference.samples, estimate.samples); }

ad::Tensor sdr_loss(std::span<const double> reference, const ad::Tensor& estimate) {
  if (estimate.rank() != 1 || estimate.size() != reference.size()) throw std::invalid_argument("sdr_loss: length mismatch");
  double sig = 0.0;
  for (double v : reference) sig += v * v;
  if (!(sig > 0.0)) throw std::invalid_argument("sdr_loss: reference is all zero");
  auto& tape = estimate.tape();
  const auto y = tape.constant(estimate.shape(), std::vector<double>(reference.begin(), reference.end()));
  const auto err = ad::add_scalar(ad::sum(ad::square(ad::sub(y, estimate))), 1e-10 * sig);
  const double to_db = 10.0 / std::numbers::ln10;
  return ad::add_scalar(ad::scale(ad::log(err), to_db), -to_db * std::log(sig));
}

std::vector<double> mix_outputs(std::span<const double> y_nr, std::span<const double> y_hlc, double alpha) {
  if (y_nr.size() != y_hlc.size()) throw std::invalid_argument("mix_outputs: length mismatch");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("mix_outputs: alpha must lie in [0, 1]");
  if (alpha == 1.0) return {y_nr.begin(), y_nr.end()};
  if (alpha == 0.0) return {y_hlc.begin(), y_hlc.end()};
  std::vector<double> out(y_nr.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = alpha * y_nr[i] + (1.0 - alpha) * y_hlc[i];
  return out;
}

AudioSignal mix_outputs(const AudioSignal& y_nr, const AudioSignal& y_hlc, double alpha) {
  return AudioSignal(mix_outputs(y_nr.samples, y_hlc.samples, alpha));
}

}  // namespace jnrhlc
