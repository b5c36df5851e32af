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
#include <span>

namespace jnrhlc {

// Real-input FFT of a fixed length, backed by FFTW. Plans are created once per
// length with FFTW_ESTIMATE so results are reproducible run to run. forward()
// and inverse() may be called concurrently from several threads.
class RealFft {
 public:
  explicit RealFft(int n);

  int size() const { return n_; }
  int bins() const { return n_ / 2 + 1; }

  // `in` may be shorter than size(); the remainder is zero-padded.
  void forward(std::span<const double> in,
               std::span<std::complex<double>> out) const;

  // Unnormalized inverse: forward followed by inverse scales by size().
  // `out` may be shorter than size(); trailing samples are dropped.
  void inverse(std::span<const std::complex<double>> in,
               std::span<double> out) const;

 private:
  struct Plans;
  int n_;
  std::shared_ptr<const Plans> plans_;
};

// Smallest n' >= n whose only prime factors are 2, 3, 5 and 7.
int fast_fft_size(int n);

}  // namespace jnrhlc
