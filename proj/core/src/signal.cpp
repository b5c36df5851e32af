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

#include "jnrhlc/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "jnrhlc/fft.hpp"

namespace jnrhlc {

namespace {

constexpr double kPi = std::numbers::pi;

void direct_convolve(std::span<const double> x, std::span<const double> h, std::span<double> y) {
  const std::size_t n = x.size();
  const std::size_t l = h.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t kmax = std::min(i + 1, l);
    double acc = 0.0;
    for (std::size_t k = 0; k < kmax; ++k) acc += h[k] * x[i - k];
    y[i] = acc;
  }
}

void direct_convolve_adjoint(std::span<const double> g, std::span<const double> h,
                             std::span<double> gx, bool accumulate) {
  const std::size_t n = g.size();
  const std::size_t l = h.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t kmax = std::min(n - i, l);
    double acc = 0.0;
    for (std::size_t k = 0; k < kmax; ++k) acc += g[i + k] * h[k];
    gx[i] = accumulate ? gx[i] + acc : acc;
  }
}

}  // namespace

void AudioSignal::validate() const {
  if (sample_rate != kSampleRate)
    throw std::invalid_argument("sample rate " + std::to_string(sample_rate) +
                                " Hz is not supported (expected 16000 Hz)");
  for (double v : samples)
    if (!std::isfinite(v)) throw std::invalid_argument("signal contains non-finite samples");
}

void StftConfig::validate() const {
  if (frame_len < 4 || frame_len % 2 != 0)
    throw std::invalid_argument("STFT frame length must be even and >= 4");
  if (hop * 2 != frame_len)
    throw std::invalid_argument("STFT hop must be half the frame length");
}

int StftConfig::frames_for(int length) const {
  if (length <= frame_len) return 1;
  return (length - frame_len + hop - 1) / hop + 1;
}

Spectrogram::Spectrogram(StftConfig config, int bins, int frames, int signal_length)
    : config_(config), bins_(bins), frames_(frames), signal_length_(signal_length) {
  if (bins <= 0 || frames <= 0 || signal_length <= 0)
    throw std::invalid_argument("Spectrogram: dimensions must be positive");
  data_.assign(static_cast<std::size_t>(bins) * frames, {0.0, 0.0});
}

Spectrogram& Spectrogram::operator*=(double s) {
  for (auto& v : data_) v *= s;
  return *this;
}

std::vector<double> hann_window(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / n);
  return w;
}

Spectrogram stft(const AudioSignal& signal, const StftConfig& config) {
  config.validate();
  const int n = static_cast<int>(signal.size());
  if (n < config.frame_len) throw std::invalid_argument("input too short");
  const int frames = config.frames_for(n);
  Spectrogram spec(config, config.bins(), frames, n);
  const auto window = hann_window(config.frame_len);
  const RealFft fft(config.frame_len);
  std::vector<double> buf(config.frame_len);
  for (int t = 0; t < frames; ++t) {
    const int start = t * config.hop;
    for (int i = 0; i < config.frame_len; ++i) {
      const int idx = start + i;
      buf[i] = idx < n ? signal.samples[idx] * window[i] : 0.0;
    }
    fft.forward(buf, spec.frame(t));
  }
  return spec;
}

AudioSignal istft(const Spectrogram& spec) {
  const StftConfig& config = spec.config();
  config.validate();
  if (spec.bins() != config.bins())
    throw std::invalid_argument("istft: " + std::to_string(spec.bins()) +
                                " bins inconsistent with frame length " +
                                std::to_string(config.frame_len));
  const int padded = config.padded_length(spec.frames());
  const auto window = hann_window(config.frame_len);
  const RealFft fft(config.frame_len);
  std::vector<double> acc(padded, 0.0);
  std::vector<double> norm(padded, 0.0);
  std::vector<double> buf(config.frame_len);
  const double scale = 1.0 / config.frame_len;
  for (int t = 0; t < spec.frames(); ++t) {
    fft.inverse(spec.frame(t), buf);
    const int start = t * config.hop;
    for (int i = 0; i < config.frame_len; ++i) {
      acc[start + i] += window[i] * buf[i] * scale;
      norm[start + i] += window[i] * window[i];
    }
  }
  std::vector<double> out(spec.signal_length());
  for (int i = 0; i < spec.signal_length(); ++i)
    out[i] = norm[i] > 1e-12 ? acc[i] / norm[i] : 0.0;
  return AudioSignal(std::move(out));
}

double erb_rate(double f_hz) {
  if (!(f_hz > 0.0)) throw std::invalid_argument("erb_rate: frequency must be positive");
  return 21.4 * std::log10(1.0 + 0.00437 * f_hz);
}

double erb_rate_to_hz(double erb_number) {
  return (std::pow(10.0, erb_number / 21.4) - 1.0) / 0.00437;
}

double erb_bandwidth(double f_hz) { return 24.7 * (0.00437 * f_hz + 1.0); }

std::vector<double> erb_space(double f_lo, double f_hi, int n) {
  if (!(f_lo > 0.0) || !(f_hi > f_lo) || n < 2)
    throw std::invalid_argument("erb_space: need 0 < f_lo < f_hi and n >= 2");
  const double e_lo = erb_rate(f_lo);
  const double e_hi = erb_rate(f_hi);
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) {
    const double e = e_lo + (e_hi - e_lo) * i / (n - 1);
    out[i] = erb_rate_to_hz(e);
  }
  out.front() = f_lo;
  out.back() = f_hi;
  return out;
}

std::complex<double> frequency_response(std::span<const double> taps, double f_hz) {
  std::complex<double> acc{0.0, 0.0};
  const double w = 2.0 * kPi * f_hz / kSampleRate;
  for (std::size_t n = 0; n < taps.size(); ++n)
    acc += taps[n] * std::polar(1.0, -w * static_cast<double>(n));
  return acc;
}

FirFilter gammatone_fir(double fc, int order, int length, std::optional<double> bandwidth_hz) {
  if (!(fc > 0.0) || !(fc < kSampleRate / 2.0))
    throw std::invalid_argument("gammatone_fir: center frequency must lie in (0, 8000) Hz");
  if (order < 1 || length < 1) throw std::invalid_argument("gammatone_fir: order and length must be >= 1");
  const double b = bandwidth_hz.value_or(1.019 * erb_bandwidth(fc));
  if (!(b > 0.0)) throw std::invalid_argument("gammatone_fir: bandwidth must be positive");
  FirFilter f;
  f.center_freq = fc;
  f.taps.resize(length);
  for (int n = 0; n < length; ++n) {
    const double t = static_cast<double>(n) / kSampleRate;
    f.taps[n] = std::pow(t, order - 1) * std::exp(-2.0 * kPi * b * t) * std::cos(2.0 * kPi * fc * t);
  }
  const double gain = std::abs(frequency_response(f.taps, fc));
  for (double& v : f.taps) v /= gain;
  return f;
}

FirFilter lowpass_fir(double cutoff_hz, int length) {
  if (!(cutoff_hz > 0.0) || !(cutoff_hz < kSampleRate / 2.0))
    throw std::invalid_argument("lowpass_fir: cutoff must lie in (0, 8000) Hz");
  if (length < 3) throw std::invalid_argument("lowpass_fir: length must be >= 3");
  FirFilter f;
  f.center_freq = cutoff_hz;
  f.taps.resize(length);
  const double fn = 2.0 * cutoff_hz / kSampleRate;
  const double mid = (length - 1) / 2.0;
  for (int n = 0; n < length; ++n) {
    const double x = n - mid;
    const double sinc = x == 0.0 ? 1.0 : std::sin(kPi * fn * x) / (kPi * fn * x);
    const double w = 0.42 - 0.5 * std::cos(2.0 * kPi * n / (length - 1)) +
                     0.08 * std::cos(4.0 * kPi * n / (length - 1));
    f.taps[n] = fn * sinc * w;
  }
  // Force exact symmetry before normalizing the DC gain.
  for (int n = 0; n < length / 2; ++n) {
    const double v = 0.5 * (f.taps[n] + f.taps[length - 1 - n]);
    f.taps[n] = f.taps[length - 1 - n] = v;
  }
  double sum = 0.0;
  for (double v : f.taps) sum += v;
  for (double& v : f.taps) v /= sum;
  return f;
}

FirFilter butterworth_lowpass_fir(double cutoff_hz, int length) {
  if (!(cutoff_hz > 0.0) || !(cutoff_hz < kSampleRate / 2.0))
    throw std::invalid_argument("butterworth_lowpass_fir: cutoff must lie in (0, 8000) Hz");
  if (length < 1) throw std::invalid_argument("butterworth_lowpass_fir: length must be >= 1");
  const double k = std::tan(kPi * cutoff_hz / kSampleRate);
  const double q = std::numbers::sqrt2;
  const double norm = 1.0 / (1.0 + q * k + k * k);
  const double b0 = k * k * norm, b1 = 2.0 * b0, b2 = b0;
  const double a1 = 2.0 * (k * k - 1.0) * norm;
  const double a2 = (1.0 - q * k + k * k) * norm;
  FirFilter f;
  f.center_freq = cutoff_hz;
  f.taps.resize(length);
  double x1 = 0.0, x2 = 0.0, y1 = 0.0, y2 = 0.0;
  for (int n = 0; n < length; ++n) {
    const double x0 = n == 0 ? 1.0 : 0.0;
    const double y0 = b0 * x0 + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
    f.taps[n] = y0;
    x2 = x1;
    x1 = x0;
    y2 = y1;
    y1 = y0;
  }
  double sum = 0.0;
  for (double v : f.taps) sum += v;
  for (double& v : f.taps) v /= sum;
  return f;
}

void causal_convolve(std::span<const double> x, std::span<const double> h, std::span<double> y) {
  if (y.size() != x.size()) throw std::invalid_argument("causal_convolve: output size mismatch");
  if (x.empty()) return;
  if (h.size() <= 64 || x.size() <= 64) {
    direct_convolve(x, h, y);
    return;
  }
  const int nfft = fast_fft_size(static_cast<int>(x.size() + h.size() - 1));
  const RealFft fft(nfft);
  std::vector<std::complex<double>> xs(fft.bins()), hs(fft.bins());
  fft.forward(x, xs);
  fft.forward(h, hs);
  for (int k = 0; k < fft.bins(); ++k) xs[k] *= hs[k] / static_cast<double>(nfft);
  fft.inverse(xs, y);
}

void causal_convolve_adjoint(std::span<const double> g, std::span<const double> h,
                             std::span<double> gx) {
  if (gx.size() != g.size()) throw std::invalid_argument("causal_convolve_adjoint: size mismatch");
  if (g.empty()) return;
  if (h.size() <= 64 || g.size() <= 64) {
    direct_convolve_adjoint(g, h, gx, false);
    return;
  }
  const int nfft = fast_fft_size(static_cast<int>(g.size() + h.size() - 1));
  const RealFft fft(nfft);
  std::vector<std::complex<double>> gs(fft.bins()), hs(fft.bins());
  fft.forward(g, gs);
  fft.forward(h, hs);
  for (int k = 0; k < fft.bins(); ++k) gs[k] *= std::conj(hs[k]) / static_cast<double>(nfft);
  fft.inverse(gs, gx);
}

AudioSignal fir_apply(const AudioSignal& signal, const FirFilter& filter) {
  AudioSignal out;
  out.sample_rate = signal.sample_rate;
  out.samples.resize(signal.size());
  causal_convolve(signal.samples, filter.taps, out.samples);
  return out;
}

std::vector<double> cascade_taps(std::span<const std::vector<double>> stages) {
  std::vector<double> acc{1.0};
  for (const auto& stage : stages) {
    if (stage.empty()) continue;
    std::vector<double> next(acc.size() + stage.size() - 1, 0.0);
    for (std::size_t i = 0; i < acc.size(); ++i)
      for (std::size_t j = 0; j < stage.size(); ++j) next[i + j] += acc[i] * stage[j];
    acc = std::move(next);
  }
  return acc;
}

// ---------------------------------------------------------------------------
// FirBank

FirBank::FirBank(std::vector<std::vector<double>> kernels) : kernels_(std::move(kernels)) {
  if (kernels_.empty()) throw std::invalid_argument("FirBank: no kernels");
  for (const auto& k : kernels_) {
    if (k.empty()) throw std::invalid_argument("FirBank: empty kernel");
    max_len_ = std::max(max_len_, static_cast<int>(k.size()));
  }
}

std::shared_ptr<const FirBank::Spectra> FirBank::spectra(int nfft) const {
  std::lock_guard lock(mutex_);
  for (const auto& [size, s] : cache_)
    if (size == nfft) return s;
  const RealFft fft(nfft);
  auto s = std::make_shared<Spectra>(kernels_.size());
  const double scale = 1.0 / nfft;
  for (std::size_t c = 0; c < kernels_.size(); ++c) {
    (*s)[c].resize(fft.bins());
    fft.forward(kernels_[c], (*s)[c]);
    for (auto& v : (*s)[c]) v *= scale;
  }
  cache_.emplace_back(nfft, s);
  return s;
}

void FirBank::apply_shared(std::span<const double> in, std::span<double> out, int rows) const {
  const int n = static_cast<int>(in.size());
  if (out.size() != static_cast<std::size_t>(rows) * n)
    throw std::invalid_argument("FirBank::apply_shared: output size mismatch");
  if (channels() != 1 && rows != channels())
    throw std::invalid_argument("FirBank::apply_shared: row count differs from channel count");
  if (n == 0) return;
  if (direct()) {
    for (int c = 0; c < rows; ++c) direct_convolve(in, kernel(c), out.subspan(static_cast<std::size_t>(c) * n, n));
    return;
  }
  const int nfft = fast_fft_size(n + max_len_ - 1);
  const RealFft fft(nfft);
  const auto spec = spectra(nfft);
  std::vector<std::complex<double>> xs(fft.bins()), ys(fft.bins());
  fft.forward(in, xs);
  for (int c = 0; c < rows; ++c) {
    const auto& hs = (*spec)[kernel_index(c)];
    for (int k = 0; k < fft.bins(); ++k) ys[k] = xs[k] * hs[k];
    fft.inverse(ys, out.subspan(static_cast<std::size_t>(c) * n, n));
  }
}

void FirBank::apply_rows(std::span<const double> in, std::span<double> out, int rows, int n) const {
  if (in.size() != static_cast<std::size_t>(rows) * n || out.size() != in.size())
    throw std::invalid_argument("FirBank::apply_rows: size mismatch");
  if (channels() != 1 && rows != channels())
    throw std::invalid_argument("FirBank::apply_rows: row count differs from channel count");
  if (n == 0) return;
  if (direct()) {
    for (int c = 0; c < rows; ++c)
      direct_convolve(in.subspan(static_cast<std::size_t>(c) * n, n), kernel(c),
                      out.subspan(static_cast<std::size_t>(c) * n, n));
    return;
  }
  const int nfft = fast_fft_size(n + max_len_ - 1);
  const RealFft fft(nfft);
  const auto spec = spectra(nfft);
  std::vector<std::complex<double>> xs(fft.bins());
  for (int c = 0; c < rows; ++c) {
    fft.forward(in.subspan(static_cast<std::size_t>(c) * n, n), xs);
    const auto& hs = (*spec)[kernel_index(c)];
    for (int k = 0; k < fft.bins(); ++k) xs[k] *= hs[k];
    fft.inverse(xs, out.subspan(static_cast<std::size_t>(c) * n, n));
  }
}

void FirBank::adjoint_shared(std::span<const double> grad_out, std::span<double> grad_in, int rows) const {
  const int n = static_cast<int>(grad_in.size());
  if (grad_out.size() != static_cast<std::size_t>(rows) * n)
    throw std::invalid_argument("FirBank::adjoint_shared: size mismatch");
  if (n == 0) return;
  if (direct()) {
    for (int c = 0; c < rows; ++c)
      direct_convolve_adjoint(grad_out.subspan(static_cast<std::size_t>(c) * n, n), kernel(c), grad_in, true);
    return;
  }
  const int nfft = fast_fft_size(n + max_len_ - 1);
  const RealFft fft(nfft);
  const auto spec = spectra(nfft);
  std::vector<std::complex<double>> gs(fft.bins()), acc(fft.bins(), {0.0, 0.0});
  for (int c = 0; c < rows; ++c) {
    fft.forward(grad_out.subspan(static_cast<std::size_t>(c) * n, n), gs);
    const auto& hs = (*spec)[kernel_index(c)];
    for (int k = 0; k < fft.bins(); ++k) acc[k] += gs[k] * std::conj(hs[k]);
  }
  std::vector<double> tmp(n);
  fft.inverse(acc, tmp);
  for (int i = 0; i < n; ++i) grad_in[i] += tmp[i];
}

void FirBank::adjoint_rows(std::span<const double> grad_out, std::span<double> grad_in, int rows, int n) const {
  if (grad_out.size() != static_cast<std::size_t>(rows) * n || grad_in.size() != grad_out.size())
    throw std::invalid_argument("FirBank::adjoint_rows: size mismatch");
  if (n == 0) return;
  if (direct()) {
    for (int c = 0; c < rows; ++c)
      direct_convolve_adjoint(grad_out.subspan(static_cast<std::size_t>(c) * n, n), kernel(c),
                              grad_in.subspan(static_cast<std::size_t>(c) * n, n), true);
    return;
  }
  const int nfft = fast_fft_size(n + max_len_ - 1);
  const RealFft fft(nfft);
  const auto spec = spectra(nfft);
  std::vector<std::complex<double>> gs(fft.bins());
  std::vector<double> tmp(n);
  for (int c = 0; c < rows; ++c) {
    fft.forward(grad_out.subspan(static_cast<std::size_t>(c) * n, n), gs);
    const auto& hs = (*spec)[kernel_index(c)];
    for (int k = 0; k < fft.bins(); ++k) gs[k] *= std::conj(hs[k]);
    fft.inverse(gs, tmp);
    double* dst = grad_in.data() + static_cast<std::size_t>(c) * n;
    for (int i = 0; i < n; ++i) dst[i] += tmp[i];
  }
}

}  // namespace jnrhlc
