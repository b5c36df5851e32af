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
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "jnrhlc/audiogram.hpp"
#include "jnrhlc/random.hpp"
#include "jnrhlc/signal.hpp"

namespace jnrhlc {

// ---------------------------------------------------------------- corpus

enum class SourceRole { Speech, Noise };

struct CorpusEntry {
  std::string name;  // manifest path, or "synthetic/..." for built-in items
  SourceRole role = SourceRole::Speech;
  std::string split = "train";
  AudioSignal audio;
};

class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<CorpusEntry> entries);

  // Reads <dir>/manifest.csv with a "path,role,split" header; role is speech
  // or noise, split is train or test, paths are relative to <dir>.
  static Corpus load(const std::filesystem::path& dir);

  // Built-in corpus: harmonic "speech" with moving formants and syllabic
  // envelopes, and noises (white, speech-shaped, amplitude-modulated, hum
  // with tones). Three quarters of each role go to train, the rest to test.
  static Corpus synthetic(std::uint64_t seed, int speech_items = 16, int noise_items = 16, double seconds = 4.5);

  // Writes WAVs and a manifest that load() reads back. A non-empty
  // `run_manifest` is embedded in every WAV and as a comment line.
  void save(const std::filesystem::path& dir, const std::string& run_manifest = {}) const;

  const std::vector<CorpusEntry>& entries() const { return entries_; }
  // Indices of the entries with this role and split.
  std::vector<std::size_t> select(SourceRole role, const std::string& split) const;
  const CorpusEntry& at(std::size_t i) const { return entries_.at(i); }

  // FNV-1a over names, roles, splits and sample values; 16 hex digits.
  std::string hash() const;

 private:
  std::vector<CorpusEntry> entries_;
};

// ---------------------------------------------------------------- rooms

// (t60 in s, seed) -> impulse response at 16 kHz with the direct path first.
using RirProvider = std::function<std::vector<double>(double t60, std::uint64_t seed)>;

// Unit direct tap followed by exponentially decaying Gaussian noise whose
// energy falls 60 dB in t60 seconds; the tail carries as much energy as the
// direct tap. Throws std::invalid_argument unless 0.05 <= t60 <= 1.
std::vector<double> synthetic_rir(double t60, std::uint64_t seed);
RirProvider synthetic_rir_provider();
// Single unit tap regardless of t60.
RirProvider anechoic_provider();

inline constexpr double kReflectionBoundaryMs = 50.0;

// Causal convolution truncated to the signal length.
AudioSignal convolve_rir(const AudioSignal& x, std::span<const double> rir);

// Convolution with the RIR cut `boundary_ms` after its largest tap.
AudioSignal early_target(const AudioSignal& speech, std::span<const double> rir,
                         double boundary_ms = kReflectionBoundaryMs);

// Noise scaled so that 10 log10(E_speech / E_noise) equals snr_db. Throws
// std::invalid_argument when either signal has zero energy.
AudioSignal mix_at_snr(const AudioSignal& speech, const AudioSignal& noise, double snr_db);

// ---------------------------------------------------------------- audiograms

struct AudiogramSampler {
  std::vector<NamedAudiogram> profiles = standard_audiograms();
  double jitter_db = 10.0;

  // Uniform profile, uniform jitter per threshold, clipped to [0, 105].
  NamedAudiogram sample(PortableRng& rng) const;
};

// ---------------------------------------------------------------- scenes

struct SceneConfig {
  double snr_min_db = -10.0;
  double snr_max_db = 20.0;
  int max_noise_sources = 3;
  double t60_min = 0.1;
  double t60_max = 0.7;
  double reflection_boundary_ms = kReflectionBoundaryMs;
  double scene_seconds = 4.0;
  std::string split = "train";
  std::uint64_t seed = 0;

  int scene_samples() const;
  void validate() const;

  std::string to_json_text() const;
  static SceneConfig from_json_text(const std::string& text);

  bool operator==(const SceneConfig&) const = default;
};

struct SceneMetadata {
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
  std::string speech;
  std::size_t speech_offset = 0;
  std::vector<std::string> noises;
  std::vector<std::size_t> noise_offsets;
  std::vector<double> snrs_db;
  double t60 = 0.0;
  double gain = 1.0;  // joint peak normalisation factor
  std::string profile;

  std::string to_json_text() const;
  static SceneMetadata from_json_text(const std::string& text);

  bool operator==(const SceneMetadata&) const = default;
};

struct Scene {
  AudioSignal x;  // noisy, reverberant mixture
  AudioSignal y;  // clean speech with early reflections
  Audiogram a;
  SceneMetadata meta;
  // Mixture parts after normalisation: x == speech + sum(noises).
  AudioSignal reverberant_speech;
  std::vector<AudioSignal> noises;
};

// Scene `index` of the stream seeded by cfg.seed. Both x and y are scaled by
// the same factor so that max |x| == 0.5. Throws std::invalid_argument if the
// split has no speech or no noise, std::runtime_error if ten draws in a row
// give a silent segment.
Scene generate_scene(const SceneConfig& cfg, const Corpus& corpus, const RirProvider& rirs,
                     const AudiogramSampler& sampler, std::uint64_t index);

// Renders scenes 0..n-1 to <dir>/scene_NNNN/{x.wav, y.wav, audiogram.json,
// metadata.json}. `manifest` (a JSON object) is embedded in every file.
void freeze_test_set(const SceneConfig& cfg, const Corpus& corpus, const RirProvider& rirs,
                     const AudiogramSampler& sampler, int n, const std::filesystem::path& dir,
                     const std::string& manifest);

// Frozen scenes in directory order; the mixture parts are left empty.
std::vector<Scene> load_test_set(const std::filesystem::path& dir);

}  // namespace jnrhlc
