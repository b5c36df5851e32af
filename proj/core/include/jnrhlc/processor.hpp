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
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "jnrhlc/ad/params.hpp"
#include "jnrhlc/ad/tensor.hpp"
#include "jnrhlc/audiogram.hpp"
#include "jnrhlc/signal.hpp"

namespace jnrhlc {

enum class Head { NR, HLC };

std::string head_name(Head h);
// "NR" or "HLC" (case-insensitive); throws std::invalid_argument otherwise.
Head parse_head(const std::string& s);

// Contiguous frequency bands given by their edges in Hz, from 0 to 8000.
// Bin j (at j * 31.25 Hz for the default STFT) belongs to the band whose
// [lo, hi) range contains it; the Nyquist bin goes to the last band.
struct BandSplitSpec {
  std::vector<double> edges_hz;

  // 20 x 200 Hz up to 4 kHz, 6 x 500 Hz up to 7 kHz, 1 x 1 kHz: K = 27.
  static BandSplitSpec standard();

  int bands() const { return static_cast<int>(edges_hz.size()) - 1; }
  // Throws std::invalid_argument on unsorted edges, wrong endpoints, or a
  // band that receives no bins.
  void validate(const StftConfig& stft = {}) const;
  // (first bin, bin count) per band.
  std::vector<std::pair<int, int>> bin_ranges(const StftConfig& stft = {}) const;

  bool operator==(const BandSplitSpec&) const = default;
};

struct ProcessorConfig {
  BandSplitSpec bands = BandSplitSpec::standard();
  int channels = 16;  // N
  int layers = 2;     // L
  std::vector<Head> heads = {Head::NR};
  bool audiogram_conditioning = false;
  StftConfig stft;

  // N = 64, L = 6.
  static ProcessorConfig full(std::vector<Head> heads, bool conditioning);
  // N = 16, L = 2.
  static ProcessorConfig desk(std::vector<Head> heads, bool conditioning);

  // Hidden sizes: time LSTM 4N, band LSTM 2N per direction, mask MLP 4N.
  int time_hidden() const { return 4 * channels; }
  int band_hidden() const { return 2 * channels; }
  int mask_hidden() const { return 4 * channels; }

  bool has_head(Head h) const;
  void validate() const;

  std::string to_json_text() const;
  static ProcessorConfig from_json_text(const std::string& text);

  bool operator==(const ProcessorConfig&) const = default;
};

// Parameter count from the layer sizes alone.
std::size_t processor_param_count(const ProcessorConfig& cfg);

// Names follow band_fc.<k>.*, embed.*, film.<l>.*, layer.<l>.time_*,
// layer.<l>.band_*, head.<NR|HLC>.band.<k>.*. FiLM projections start at
// zero and each mask head starts as the identity (mask 1, residual 0) plus
// small random weights.
ad::ParamSet init_processor_params(const ProcessorConfig& cfg, std::uint64_t seed);

// Mask and residual spectra, each [2, T, F] (real, imaginary).
struct HeadOutput {
  ad::Tensor mask;
  ad::Tensor residual;
};

struct ProcessorOutputs {
  std::optional<ad::Tensor> nr;
  std::optional<ad::Tensor> hlc;
};

// Band-split RNN with audiogram FiLM conditioning. Features are laid out
// [K, T, N] (band, frame, channel).
class SpeechProcessor {
 public:
  explicit SpeechProcessor(ProcessorConfig cfg);

  const ProcessorConfig& config() const { return cfg_; }
  const std::vector<std::pair<int, int>>& bin_ranges() const { return ranges_; }

  // spec: [2, T, F] -> [K, T, N]
  ad::Tensor band_split(const ad::BoundParams& p, const ad::Tensor& spec) const;
  // -> [N], tanh of an affine map of thresholds / 105.
  ad::Tensor audiogram_embed(const ad::BoundParams& p, ad::Tape& tape, const Audiogram& a) const;
  // h * (1 + dgamma(e)) + beta(e), broadcast over bands and frames.
  ad::Tensor film(const ad::BoundParams& p, int layer, const ad::Tensor& h, const ad::Tensor& e) const;
  // Residual time block (unidirectional, causal) then residual band block
  // (bidirectional).
  ad::Tensor dual_path_layer(const ad::BoundParams& p, int layer, const ad::Tensor& h) const;
  HeadOutput mask_estimate(const ad::BoundParams& p, Head head, const ad::Tensor& h) const;
  // mask * spec + residual in complex arithmetic; all [2, T, F].
  static ad::Tensor apply_mask(const ad::Tensor& spec, const HeadOutput& out);

  // x: [S] -> one [S] signal per enabled head. Throws std::invalid_argument
  // when the audiogram is missing but conditioning is on, or given while it
  // is off.
  ProcessorOutputs forward(const ad::BoundParams& p, const ad::Tensor& x, const std::optional<Audiogram>& a) const;

  struct Signals {
    std::optional<AudioSignal> nr;
    std::optional<AudioSignal> hlc;
  };
  // Off-tape convenience.
  Signals process(const ad::ParamSet& params, const AudioSignal& x, const std::optional<Audiogram>& a) const;

 private:
  ProcessorConfig cfg_;
  std::vector<std::pair<int, int>> ranges_;
};

}  // namespace jnrhlc
