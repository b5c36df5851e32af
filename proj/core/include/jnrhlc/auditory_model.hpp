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

#include <complex>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "jnrhlc/ad/tensor.hpp"
#include "jnrhlc/audiogram.hpp"
#include "jnrhlc/drnl.hpp"
#include "jnrhlc/signal.hpp"

namespace jnrhlc {

inline constexpr int kAuditoryChannels = 31;
inline constexpr double kLowestCenterHz = 80.0;
inline constexpr double kHighestCenterHz = 7643.0;

// Signals are in pascal: an RMS of 1 is 94 dB SPL.
inline constexpr double kReferencePressure = 20e-6;
double db_spl_to_rms(double db_spl);
AudioSignal pure_tone(double freq_hz, double db_spl, double duration_s);

// erb_space(80, 7643, 31)
std::vector<double> auditory_center_frequencies();

// Instantaneous compression y = gain * ln(1 + x / threshold) standing in
// for the adaptation loops.
struct CompressionConstants {
  double gain;
  double threshold;
};

// Result of calibrate_compression() for the default model; regenerate with
// `jnrhlc calibrate-compression` after changing any stage before the
// compression. Oracle configuration: five adaptation loops (5, 50, 129, 253,
// 500 ms), floor 1e-5, 0 dB SPL at 1 kHz mapped to the floor, anchors 20 and
// 100 dB SPL 1 kHz tones on the channel nearest 1 kHz.
inline constexpr CompressionConstants kDefaultCompression{8.7692327455731771, 2.1739007806413146e-05};

struct AuditoryModelOptions {
  bool middle_ear = true;
  CompressionConstants compression = kDefaultCompression;
};

// Fixed-kernel DRNL filterbank with per-channel phasors at the best
// frequency, used to map OHC loss onto the broken stick.
struct DrnlKernels {
  std::vector<std::vector<double>> linear;      // middle ear * gain * GT^n * LP^m
  std::vector<std::vector<double>> nonlinear_pre;   // middle ear * GT^n
  std::vector<std::vector<double>> nonlinear_post;  // GT^n * LP^m
  std::vector<std::complex<double>> linear_at_bf;
  std::vector<std::complex<double>> nonlinear_at_bf;  // includes the low-level gain a
};

DrnlKernels build_drnl_kernels(const DrnlParams& params, std::span<const double> middle_ear_taps);

// Per channel, the level drop in dB of a low-level tone at BF when the
// nonlinear path is removed (never below 0).
std::vector<double> compute_ohc_max(const DrnlParams& params);

// 512-tap linear-phase approximation of the stapes-velocity response,
// including the absolute pressure-to-velocity scale.
std::vector<double> middle_ear_taps();

// Nonnegative 25-tap Gaussian smoother, -6 dB at 1 kHz, unit DC gain.
std::vector<double> ihc_lowpass_taps();

// Differentiable auditory model. Construction designs every filter; the
// object is immutable afterwards and run() may be called concurrently on
// separate tapes.
class AuditoryModel {
 public:
  explicit AuditoryModel(DrnlParams params, AuditoryModelOptions options = {});
  AuditoryModel();

  // Shared instance with the literature parameters and default options.
  static std::shared_ptr<const AuditoryModel> standard();

  int channels() const { return static_cast<int>(params_.channels.size()); }
  const std::vector<double>& center_frequencies() const { return center_freqs_; }
  const DrnlParams& params() const { return params_; }
  const AuditoryModelOptions& options() const { return options_; }
  const std::vector<double>& ohc_max() const { return ohc_max_; }

  // All-zero profile when `a` is empty.
  HearingLossProfile hearing_loss(const std::optional<Audiogram>& a) const;
  // Factor on the broken stick's linear gain that lowers a low-level tone at
  // BF by hl_ohc dB. Exactly 1 for hl_ohc == 0.
  std::vector<double> ohc_gains(std::span<const double> hl_ohc) const;

  // Stages on the tape. x: [N]; filterbank output and later stages: [C, N].
  ad::Tensor middle_ear(const ad::Tensor& x) const;
  // Middle ear and DRNL, with the broken stick's linear gain scaled by
  // `ohc_gain` per channel.
  ad::Tensor filterbank(const ad::Tensor& x, std::span<const double> ohc_gain) const;
  ad::Tensor linear_path(const ad::Tensor& x) const;
  ad::Tensor ihc_transduction(const ad::Tensor& drnl) const;
  // Throws std::invalid_argument on negative input.
  ad::Tensor log_compression(const ad::Tensor& ihc, std::span<const double> hl_ihc) const;

  // Full model; `a` empty selects the normal-hearing model.
  ad::Tensor run(const ad::Tensor& x, const std::optional<Audiogram>& a) const;
  // Off-tape convenience: channel-major [C * N].
  std::vector<double> run(const AudioSignal& x, const std::optional<Audiogram>& a) const;

 private:
  DrnlParams params_;
  AuditoryModelOptions options_;
  std::vector<double> center_freqs_;
  DrnlKernels kernels_;
  std::vector<double> ohc_max_;
  std::vector<double> broken_stick_a_, broken_stick_b_, broken_stick_c_;
  std::shared_ptr<const FirBank> middle_ear_bank_;
  std::shared_ptr<const FirBank> linear_bank_;
  std::shared_ptr<const FirBank> pre_bank_;
  std::shared_ptr<const FirBank> post_bank_;
  std::shared_ptr<const FirBank> ihc_bank_;
};

// Steady-state output of the five adaptation loops for a constant input,
// obtained by running the loops in time until they settle.
double adaptation_loops_steady_state(double input);

struct CompressionCalibration {
  CompressionConstants constants;
  int channel;                // channel nearest 1 kHz
  double floor_scale;         // maps IHC output to adaptation-loop units
  double ihc_low, ihc_high;   // mean IHC output at the two anchors
  double target_low, target_high;
};

// Two-point fit of the compression against the adaptation-loop oracle. The
// model's own compression constants are not used.
CompressionCalibration calibrate_compression(const AuditoryModel& model);

}  // namespace jnrhlc
