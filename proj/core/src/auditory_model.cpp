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

#include "jnrhlc/auditory_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "jnrhlc/ad/ops.hpp"

namespace jnrhlc {

namespace {

constexpr int kMiddleEarTaps = 512;
// Stapes velocity per pascal at 1 kHz. Sets the absolute level of the
// broken-stick knee: about 35 dB SPL for a 1 kHz tone.
constexpr double kMiddleEarScale = 3.4e-4;

struct Knot {
  double hz;
  double db;
};

// Relative stapes-velocity magnitude, 0 dB at 800-1000 Hz.
constexpr Knot kMiddleEarKnots[] = {
    {100, -16}, {200, -10}, {400, -4}, {800, 0},    {1000, 0},  {1500, -2},
    {2000, -4}, {3000, -8}, {4000, -11}, {6000, -15}, {8000, -20},
};

double middle_ear_db(double f) {
  const auto* first = std::begin(kMiddleEarKnots);
  const auto* last = std::end(kMiddleEarKnots) - 1;
  if (f <= first->hz) return first->db;
  if (f >= last->hz) return last->db;
  const auto* hi = first + 1;
  while (hi->hz < f) ++hi;
  const auto* lo = hi - 1;
  const double t = std::log(f / lo->hz) / std::log(hi->hz / lo->hz);
  return lo->db + t * (hi->db - lo->db);
}

std::vector<double> repeat(const std::vector<double>& taps, int times) {
  std::vector<std::vector<double>> stages(static_cast<std::size_t>(times), taps);
  return stages.empty() ? std::vector<double>{1.0} : cascade_taps(stages);
}

std::vector<double> convolve(const std::vector<double>& a, const std::vector<double>& b) {
  const std::vector<double> parts[] = {a, b};
  return cascade_taps(parts);
}

}  // namespace

double db_spl_to_rms(double db_spl) { return kReferencePressure * std::pow(10.0, db_spl / 20.0); }

AudioSignal pure_tone(double freq_hz, double db_spl, double duration_s) {
  if (!(freq_hz > 0.0 && freq_hz < kSampleRate / 2.0)) throw std::invalid_argument("pure_tone: frequency outside (0, 8000) Hz");
  if (!(duration_s > 0.0)) throw std::invalid_argument("pure_tone: duration must be positive");
  const auto n = static_cast<std::size_t>(std::llround(duration_s * kSampleRate));
  const double amp = std::sqrt(2.0) * db_spl_to_rms(db_spl);
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i)
    s[i] = amp * std::sin(2.0 * std::numbers::pi * freq_hz * static_cast<double>(i) / kSampleRate);
  return AudioSignal(std::move(s));
}

std::vector<double> auditory_center_frequencies() {
  return erb_space(kLowestCenterHz, kHighestCenterHz, kAuditoryChannels);
}

std::vector<double> middle_ear_taps() {
  // Type II frequency sampling: real magnitudes on the M/2+1 bins with a
  // linear phase of (M-1)/2 samples; the Nyquist bin must be zero.
  const int m = kMiddleEarTaps;
  const double alpha = (m - 1) / 2.0;
  std::vector<double> mag(static_cast<std::size_t>(m / 2), 0.0);
  for (int k = 0; k < m / 2; ++k)
    mag[static_cast<std::size_t>(k)] = std::pow(10.0, middle_ear_db(static_cast<double>(k) * kSampleRate / m) / 20.0);
  std::vector<double> h(static_cast<std::size_t>(m));
  for (int n = 0; n < m; ++n) {
    double acc = mag[0];
    for (int k = 1; k < m / 2; ++k)
      acc += 2.0 * mag[static_cast<std::size_t>(k)] * std::cos(2.0 * std::numbers::pi * k * (n - alpha) / m);
    h[static_cast<std::size_t>(n)] = acc / m;
  }
  const double g = kMiddleEarScale / std::abs(frequency_response(h, 1000.0));
  for (double& v : h) v *= g;
  return h;
}

std::vector<double> ihc_lowpass_taps() {
  // A Gaussian kernel's response is exp(-(w sigma)^2 / 2); pick sigma for
  // one half at 1 kHz.
  const double w = 2.0 * std::numbers::pi * 1000.0 / kSampleRate;
  const double sigma = std::sqrt(2.0 * std::log(2.0)) / w;
  constexpr int kTaps = 25;
  std::vector<double> h(kTaps);
  double total = 0.0;
  for (int i = 0; i < kTaps; ++i) {
    const double d = i - (kTaps - 1) / 2.0;
    h[static_cast<std::size_t>(i)] = std::exp(-0.5 * d * d / (sigma * sigma));
    total += h[static_cast<std::size_t>(i)];
  }
  for (double& v : h) v /= total;
  return h;
}

DrnlKernels build_drnl_kernels(const DrnlParams& params, std::span<const double> middle_ear) {
  params.validate();
  const std::vector<double> me(middle_ear.begin(), middle_ear.end());
  DrnlKernels k;
  for (const auto& ch : params.channels) {
    const auto gt_lin = gammatone_fir(ch.lin_fc, 1, kAuditoryFirLength, ch.lin_bw).taps;
    const auto lp_lin = butterworth_lowpass_fir(ch.lin_lp).taps;
    const auto gt_nl = gammatone_fir(ch.nlin_fc, 1, kAuditoryFirLength, ch.nlin_bw).taps;
    const auto lp_nl = butterworth_lowpass_fir(ch.nlin_lp).taps;

    auto lin = convolve(me, convolve(repeat(gt_lin, ch.lin_ngt), repeat(lp_lin, ch.lin_nlp)));
    for (double& v : lin) v *= ch.lin_gain;
    auto pre = convolve(me, repeat(gt_nl, ch.nlin_ngt_before));
    auto post = convolve(repeat(gt_nl, ch.nlin_ngt_after), repeat(lp_nl, ch.nlin_nlp));

    k.linear_at_bf.push_back(frequency_response(lin, ch.bf));
    k.nonlinear_at_bf.push_back(ch.a * frequency_response(pre, ch.bf) * frequency_response(post, ch.bf));
    k.linear.push_back(std::move(lin));
    k.nonlinear_pre.push_back(std::move(pre));
    k.nonlinear_post.push_back(std::move(post));
  }
  return k;
}

namespace {

std::vector<double> ohc_max_from(const DrnlKernels& k) {
  std::vector<double> out;
  for (std::size_t i = 0; i < k.linear_at_bf.size(); ++i) {
    const double full = std::abs(k.linear_at_bf[i] + k.nonlinear_at_bf[i]);
    const double lin = std::abs(k.linear_at_bf[i]);
    out.push_back(std::max(0.0, 20.0 * std::log10(full / lin)));
  }
  return out;
}

}  // namespace

std::vector<double> compute_ohc_max(const DrnlParams& params) {
  const double identity[] = {1.0};
  return ohc_max_from(build_drnl_kernels(params, identity));
}

AuditoryModel::AuditoryModel() : AuditoryModel(DrnlParams::literature(auditory_center_frequencies())) {}

AuditoryModel::AuditoryModel(DrnlParams params, AuditoryModelOptions options)
    : params_(std::move(params)), options_(options) {
  params_.validate();
  if (!(options_.compression.gain > 0.0) || !(options_.compression.threshold > 0.0))
    throw std::invalid_argument("AuditoryModel: compression constants must be positive");
  for (const auto& ch : params_.channels) {
    center_freqs_.push_back(ch.bf);
    broken_stick_a_.push_back(ch.a);
    broken_stick_b_.push_back(ch.b);
    broken_stick_c_.push_back(ch.c);
  }
  const auto me = options_.middle_ear ? middle_ear_taps() : std::vector<double>{1.0};
  kernels_ = build_drnl_kernels(params_, me);
  ohc_max_ = ohc_max_from(kernels_);
  middle_ear_bank_ = std::make_shared<FirBank>(std::vector<std::vector<double>>{me});
  linear_bank_ = std::make_shared<FirBank>(kernels_.linear);
  pre_bank_ = std::make_shared<FirBank>(kernels_.nonlinear_pre);
  post_bank_ = std::make_shared<FirBank>(kernels_.nonlinear_post);
  ihc_bank_ = std::make_shared<FirBank>(std::vector<std::vector<double>>{ihc_lowpass_taps()});
}

std::shared_ptr<const AuditoryModel> AuditoryModel::standard() {
  static const auto model = std::make_shared<const AuditoryModel>();
  return model;
}

HearingLossProfile AuditoryModel::hearing_loss(const std::optional<Audiogram>& a) const {
  std::vector<double> total(center_freqs_.size(), 0.0);
  if (a) {
    a->validate();
    total = interpolate_audiogram(*a, center_freqs_);
  }
  return split_hearing_loss(total, ohc_max_);
}

std::vector<double> AuditoryModel::ohc_gains(std::span<const double> hl_ohc) const {
  if (hl_ohc.size() != center_freqs_.size()) throw std::invalid_argument("ohc_gains: one value per channel expected");
  std::vector<double> g(hl_ohc.size(), 1.0);
  for (std::size_t i = 0; i < hl_ohc.size(); ++i) {
    if (hl_ohc[i] < 0.0) throw std::invalid_argument("ohc_gains: negative loss");
    if (hl_ohc[i] == 0.0) continue;
    // Solve |L + g N|^2 = |L + N|^2 10^(-hl/10) for the larger root, which
    // falls from 1 as the loss grows.
    const auto l = kernels_.linear_at_bf[i];
    const auto nl = kernels_.nonlinear_at_bf[i];
    const double qa = std::norm(nl);
    const double qb = 2.0 * std::real(l * std::conj(nl));
    const double qc = std::norm(l) - std::norm(l + nl) * std::pow(10.0, -hl_ohc[i] / 10.0);
    const double disc = qb * qb - 4.0 * qa * qc;
    const double root = disc <= 0.0 ? -qb / (2.0 * qa) : (-qb + std::sqrt(disc)) / (2.0 * qa);
    g[i] = std::clamp(root, 0.0, 1.0);
  }
  return g;
}

ad::Tensor AuditoryModel::middle_ear(const ad::Tensor& x) const {
  if (x.rank() != 1) throw std::invalid_argument("middle_ear: expected a [N] signal, got " + ad::shape_str(x.shape()));
  return ad::reshape(ad::fir_shared(x, middle_ear_bank_, 1), {x.dim(0)});
}

ad::Tensor AuditoryModel::linear_path(const ad::Tensor& x) const {
  if (x.rank() != 1) throw std::invalid_argument("linear_path: expected a [N] signal, got " + ad::shape_str(x.shape()));
  return ad::fir_shared(x, linear_bank_, channels());
}

ad::Tensor AuditoryModel::filterbank(const ad::Tensor& x, std::span<const double> ohc_gain) const {
  if (x.rank() != 1) throw std::invalid_argument("filterbank: expected a [N] signal, got " + ad::shape_str(x.shape()));
  if (ohc_gain.size() != center_freqs_.size()) throw std::invalid_argument("filterbank: one OHC gain per channel expected");
  std::vector<double> a(broken_stick_a_.size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = broken_stick_a_[i] * ohc_gain[i];
  const auto lin = ad::fir_shared(x, linear_bank_, channels());
  const auto pre = ad::fir_shared(x, pre_bank_, channels());
  const auto nl = ad::fir_rows(ad::broken_stick(pre, a, broken_stick_b_, broken_stick_c_), post_bank_);
  return ad::add(lin, nl);
}

ad::Tensor AuditoryModel::ihc_transduction(const ad::Tensor& drnl) const {
  if (drnl.rank() != 2) throw std::invalid_argument("ihc_transduction: expected [C, N], got " + ad::shape_str(drnl.shape()));
  return ad::fir_rows(ad::relu(drnl), ihc_bank_);
}

ad::Tensor AuditoryModel::log_compression(const ad::Tensor& ihc, std::span<const double> hl_ihc) const {
  if (ihc.rank() != 2) throw std::invalid_argument("log_compression: expected [C, N], got " + ad::shape_str(ihc.shape()));
  const int rows = ihc.dim(0);
  if (hl_ihc.size() != static_cast<std::size_t>(rows)) throw std::invalid_argument("log_compression: one loss per channel expected");
  for (double v : ihc.values())
    if (v < 0.0) throw std::invalid_argument("log_compression: negative input");
  std::vector<double> g(static_cast<std::size_t>(rows));
  for (int c = 0; c < rows; ++c)
    g[static_cast<std::size_t>(c)] = std::pow(10.0, -hl_ihc[static_cast<std::size_t>(c)] / 20.0) / options_.compression.threshold;
  const auto gains = ihc.tape().constant({rows, 1}, std::move(g));
  return ad::scale(ad::log(ad::add_scalar(ad::mul(ihc, gains), 1.0)), options_.compression.gain);
}

ad::Tensor AuditoryModel::run(const ad::Tensor& x, const std::optional<Audiogram>& a) const {
  const auto profile = hearing_loss(a);
  const auto drnl = filterbank(x, ohc_gains(profile.hl_ohc));
  return log_compression(ihc_transduction(drnl), profile.hl_ihc);
}

std::vector<double> AuditoryModel::run(const AudioSignal& x, const std::optional<Audiogram>& a) const {
  x.validate();
  ad::Tape tape;
  const auto in = tape.constant({static_cast<int>(x.size())}, x.samples);
  const auto out = run(in, a);
  return {out.values().begin(), out.values().end()};
}

double adaptation_loops_steady_state(double input) {
  constexpr double kFloor = 1e-5;
  constexpr double kTau[] = {0.005, 0.050, 0.129, 0.253, 0.500};
  double state[5];
  double coef[5];
  for (int i = 0; i < 5; ++i) {
    coef[i] = std::exp(-1.0 / (kTau[i] * kSampleRate));
    state[i] = std::pow(kFloor, 1.0 / std::pow(2.0, i + 1));
  }
  const double x = std::max(input, kFloor);
  const double corr = std::pow(kFloor, 1.0 / 32.0);
  double out = 0.0;
  double previous = -1.0;
  // Settling is checked every 100 ms; the slowest loop needs a few seconds.
  for (int block = 0; block < 600; ++block) {
    for (int s = 0; s < kSampleRate / 10; ++s) {
      double v = x;
      for (int i = 0; i < 5; ++i) {
        v /= state[i];
        state[i] = coef[i] * state[i] + (1.0 - coef[i]) * v;
      }
      out = v;
    }
    if (std::abs(out - previous) < 1e-13 * std::abs(out)) break;
    previous = out;
  }
  return 100.0 * (out - corr) / (1.0 - corr);
}

CompressionCalibration calibrate_compression(const AuditoryModel& model) {
  const auto& cf = model.center_frequencies();
  int ch = 0;
  for (int i = 1; i < static_cast<int>(cf.size()); ++i)
    if (std::abs(cf[static_cast<std::size_t>(i)] - 1000.0) < std::abs(cf[static_cast<std::size_t>(ch)] - 1000.0)) ch = i;

  // Steady part (last 60%) of the IHC output on the calibration channel.
  const std::vector<double> unity(cf.size(), 1.0);
  auto ihc_steady = [&](double level) {
    const auto tone = pure_tone(1000.0, level, 0.5);
    ad::Tape tape;
    const auto x = tape.constant({static_cast<int>(tone.size())}, tone.samples);
    const auto ihc = model.ihc_transduction(model.filterbank(x, unity));
    const int n = ihc.dim(1);
    const auto row = ihc.values().subspan(static_cast<std::size_t>(ch) * n, static_cast<std::size_t>(n));
    return std::vector<double>(row.begin() + n * 2 / 5, row.end());
  };
  auto mean = [](const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(v.size());
  };

  CompressionCalibration cal{};
  cal.channel = ch;
  cal.floor_scale = 1e-5 / mean(ihc_steady(0.0));
  const auto low = ihc_steady(20.0);
  const auto high = ihc_steady(100.0);
  cal.ihc_low = mean(low);
  cal.ihc_high = mean(high);
  cal.target_low = adaptation_loops_steady_state(cal.floor_scale * cal.ihc_low);
  cal.target_high = adaptation_loops_steady_state(cal.floor_scale * cal.ihc_high);

  // The time-averaged compressed output has to hit both targets:
  // gain * mean(ln(1 + x/t)) = target. The ratio of the two means falls
  // towards 1 as t shrinks.
  auto mean_log = [](const std::vector<double>& v, double t) {
    double acc = 0.0;
    for (double x : v) acc += std::log1p(x / t);
    return acc / static_cast<double>(v.size());
  };
  auto ratio = [&](double t) { return mean_log(high, t) / mean_log(low, t); };
  const double want = cal.target_high / cal.target_low;
  double lo = std::log(cal.ihc_low) - 40.0;
  double hi = std::log(cal.ihc_high) + 40.0;
  if (!(ratio(std::exp(lo)) < want && ratio(std::exp(hi)) > want))
    throw std::runtime_error("calibrate_compression: anchor targets cannot be met by a log compression");
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (ratio(std::exp(mid)) < want ? lo : hi) = mid;
  }
  const double theta = std::exp(0.5 * (lo + hi));
  cal.constants.threshold = theta;
  cal.constants.gain = cal.target_low / mean_log(low, theta);
  return cal;
}

}  // namespace jnrhlc
