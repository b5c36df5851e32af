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
#include <mutex>
#include <optional>
#include <span>
#include <vector>

namespace jnrhlc {

inline constexpr int kSampleRate = 16000;

// Mono time-domain buffer. Everything in the toolkit runs at 16 kHz.
struct AudioSignal {
  std::vector<double> samples;
  int sample_rate = kSampleRate;

  AudioSignal() = default;
  explicit AudioSignal(std::vector<double> s, int rate = kSampleRate)
      : samples(std::move(s)), sample_rate(rate) {}

  std::size_t size() const { return samples.size(); }
  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }

  // Throws std::invalid_argument on a foreign sample rate or non-finite samples.
  void validate() const;
};

// Hann-windowed analysis with 50% overlap. The defaults are 32 ms frames and
// a 16 ms hop at 16 kHz.
struct StftConfig {
  int frame_len = 512;
  int hop = 256;

  int bins() const { return frame_len / 2 + 1; }
  void validate() const;
  // Number of frames covering `length` samples; the tail is zero-padded.
  int frames_for(int length) const;
  int padded_length(int frames) const { return (frames - 1) * hop + frame_len; }

  bool operator==(const StftConfig&) const = default;
};

// One-sided complex spectrogram, stored frame-major ([frame][bin]).
class Spectrogram {
 public:
  Spectrogram(StftConfig config, int bins, int frames, int signal_length);

  const StftConfig& config() const { return config_; }
  int bins() const { return bins_; }
  int frames() const { return frames_; }
  // Length of the analysed signal; istft() trims its output to this.
  int signal_length() const { return signal_length_; }

  std::complex<double>& at(int bin, int frame) { return data_[static_cast<std::size_t>(frame) * bins_ + bin]; }
  const std::complex<double>& at(int bin, int frame) const { return data_[static_cast<std::size_t>(frame) * bins_ + bin]; }

  std::span<std::complex<double>> frame(int t) { return {data_.data() + static_cast<std::size_t>(t) * bins_, static_cast<std::size_t>(bins_)}; }
  std::span<const std::complex<double>> frame(int t) const { return {data_.data() + static_cast<std::size_t>(t) * bins_, static_cast<std::size_t>(bins_)}; }

  std::span<std::complex<double>> data() { return data_; }
  std::span<const std::complex<double>> data() const { return data_; }

  Spectrogram& operator*=(double s);

 private:
  StftConfig config_;
  int bins_;
  int frames_;
  int signal_length_;
  std::vector<std::complex<double>> data_;
};

// Periodic Hann window (satisfies constant overlap-add at hop = n/2).
std::vector<double> hann_window(int n);

// Throws std::invalid_argument("input too short") when the signal is shorter
// than one frame.
Spectrogram stft(const AudioSignal& signal, const StftConfig& config = {});

// Weighted overlap-add with the synthesis sum divided by the summed squared
// window. Samples where that sum vanishes (the very first sample) are zero.
AudioSignal istft(const Spectrogram& spec);

// Glasberg & Moore ERB-rate scale, E(f) = 21.4 log10(1 + 0.00437 f).
double erb_rate(double f_hz);
double erb_rate_to_hz(double erb_number);
// Equivalent rectangular bandwidth in Hz, 24.7 (0.00437 f + 1).
double erb_bandwidth(double f_hz);
// n frequencies uniformly spaced on the ERB-rate axis with exact endpoints.
std::vector<double> erb_space(double f_lo, double f_hi, int n);

inline constexpr int kAuditoryFirLength = 512;  // 32 ms at 16 kHz

struct FirFilter {
  std::vector<double> taps;
  std::optional<double> center_freq;
};

// Truncated gammatone impulse response t^(order-1) exp(-2 pi b t) cos(2 pi fc t),
// scaled to unit gain at fc. `bandwidth_hz` defaults to 1.019 ERB(fc).
FirFilter gammatone_fir(double fc, int order = 4, int length = kAuditoryFirLength,
                        std::optional<double> bandwidth_hz = std::nullopt);

// Linear-phase Blackman-windowed sinc lowpass with unit DC gain; the response
// is -6 dB at the cutoff.
FirFilter lowpass_fir(double cutoff_hz, int length = kAuditoryFirLength);

// Impulse response of a causal second-order Butterworth lowpass (bilinear
// transform), truncated to `length` taps and scaled to unit DC gain.
FirFilter butterworth_lowpass_fir(double cutoff_hz, int length = kAuditoryFirLength);

// Causal convolution with the tail truncated (output length == input length).
AudioSignal fir_apply(const AudioSignal& signal, const FirFilter& filter);

// Full-length convolution of several filters (the cascade's impulse response).
std::vector<double> cascade_taps(std::span<const std::vector<double>> stages);

// DTFT of `taps` at frequency f (Hz) for a 16 kHz sampling rate.
std::complex<double> frequency_response(std::span<const double> taps, double f_hz);

// y[n] = sum_k h[k] x[n-k] for n in [0, x.size()).
void causal_convolve(std::span<const double> x, std::span<const double> h, std::span<double> y);
// Adjoint of causal_convolve: gx[n] = sum_{m>=n} g[m] h[m-n].
void causal_convolve_adjoint(std::span<const double> g, std::span<const double> h,
                             std::span<double> gx);

// A set of fixed FIR kernels applied channel-wise. A bank with a single
// kernel applies it to every row. Long kernels run through cached FFT
// spectra; short ones use direct convolution. Const methods are thread-safe.
class FirBank {
 public:
  explicit FirBank(std::vector<std::vector<double>> kernels);

  int channels() const { return static_cast<int>(kernels_.size()); }
  const std::vector<double>& kernel(int c) const { return kernels_[kernel_index(c)]; }

  // out[c*n + i] = (in * kernel_c)[i]; in has n samples, out has rows*n.
  void apply_shared(std::span<const double> in, std::span<double> out, int rows) const;
  // out[c*n + i] = (in_c * kernel_c)[i]
  void apply_rows(std::span<const double> in, std::span<double> out, int rows, int n) const;
  // Accumulating adjoints of the two operations above.
  void adjoint_shared(std::span<const double> grad_out, std::span<double> grad_in, int rows) const;
  void adjoint_rows(std::span<const double> grad_out, std::span<double> grad_in, int rows, int n) const;

 private:
  using Spectra = std::vector<std::vector<std::complex<double>>>;
  int kernel_index(int row) const { return kernels_.size() == 1 ? 0 : row; }
  bool direct() const { return max_len_ <= kDirectMaxTaps; }
  std::shared_ptr<const Spectra> spectra(int nfft) const;

  static constexpr int kDirectMaxTaps = 64;
  std::vector<std::vector<double>> kernels_;
  int max_len_ = 0;
  mutable std::mutex mutex_;
  mutable std::vector<std::pair<int, std::shared_ptr<const Spectra>>> cache_;
};

}  // namespace jnrhlc
