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

#include "jnrhlc/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace jnrhlc {

namespace {

struct AlignedDeleter {
  void operator()(void* p) const { fftw_free(p); }
};

template <typename T>
using AlignedPtr = std::unique_ptr<T[], AlignedDeleter>;

template <typename T>
AlignedPtr<T> aligned_alloc_n(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * std::max<std::size_t>(n, 1)));
  if (p == nullptr) throw std::bad_alloc();
  return AlignedPtr<T>(p);
}

// Per-thread scratch buffers. All buffers come from fftw_malloc so that the
// alignment seen by a plan never differs from the one it was planned with.
struct Scratch {
  std::size_t real_cap = 0;
  std::size_t complex_cap = 0;
  AlignedPtr<double> real;
  AlignedPtr<fftw_complex> cplx;

  void reserve(std::size_t n_real, std::size_t n_complex) {
    if (n_real > real_cap) {
      real = aligned_alloc_n<double>(n_real);
      real_cap = n_real;
    }
    if (n_complex > complex_cap) {
      cplx = aligned_alloc_n<fftw_complex>(n_complex);
      complex_cap = n_complex;
    }
  }
};

Scratch& scratch() {
  thread_local Scratch s;
  return s;
}

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

struct RealFft::Plans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

RealFft::RealFft(int n) : n_(n) {
  if (n < 2) throw std::invalid_argument("RealFft: size must be >= 2");
  // Plans live for the whole process.
  static auto* cache = new std::map<int, std::shared_ptr<const Plans>>();
  std::lock_guard lock(planner_mutex());
  auto it = cache->find(n);
  if (it != cache->end()) {
    plans_ = it->second;
    return;
  }
  auto real = aligned_alloc_n<double>(n);
  auto cplx = aligned_alloc_n<fftw_complex>(n / 2 + 1);
  auto plans = std::make_shared<Plans>();
  plans->r2c = fftw_plan_dft_r2c_1d(n, real.get(), cplx.get(), FFTW_ESTIMATE);
  plans->c2r = fftw_plan_dft_c2r_1d(n, cplx.get(), real.get(),
                                    FFTW_ESTIMATE | FFTW_DESTROY_INPUT);
  if (!plans->r2c || !plans->c2r) throw std::runtime_error("RealFft: FFTW planning failed");
  cache->emplace(n, plans);
  plans_ = std::move(plans);
}

void RealFft::forward(std::span<const double> in,
                      std::span<std::complex<double>> out) const {
  if (in.size() > static_cast<std::size_t>(n_))
    throw std::invalid_argument("RealFft::forward: input longer than FFT size");
  if (out.size() != static_cast<std::size_t>(bins()))
    throw std::invalid_argument("RealFft::forward: output must have size()/2+1 bins");
  Scratch& s = scratch();
  s.reserve(n_, bins());
  std::copy(in.begin(), in.end(), s.real.get());
  std::fill(s.real.get() + in.size(), s.real.get() + n_, 0.0);
  fftw_execute_dft_r2c(plans_->r2c, s.real.get(), s.cplx.get());
  std::memcpy(static_cast<void*>(out.data()), s.cplx.get(), sizeof(fftw_complex) * bins());
}

void RealFft::inverse(std::span<const std::complex<double>> in,
                      std::span<double> out) const {
  if (in.size() != static_cast<std::size_t>(bins()))
    throw std::invalid_argument("RealFft::inverse: input must have size()/2+1 bins");
  if (out.size() > static_cast<std::size_t>(n_))
    throw std::invalid_argument("RealFft::inverse: output longer than FFT size");
  Scratch& s = scratch();
  s.reserve(n_, bins());
  std::memcpy(s.cplx.get(), in.data(), sizeof(fftw_complex) * bins());
  fftw_execute_dft_c2r(plans_->c2r, s.cplx.get(), s.real.get());
  std::copy(s.real.get(), s.real.get() + out.size(), out.begin());
}

int fast_fft_size(int n) {
  if (n <= 2) return 2;
  for (int m = n;; ++m) {
    int r = m;
    for (int p : {2, 3, 5, 7})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

}  // namespace jnrhlc
