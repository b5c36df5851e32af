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

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace jnrhlc {

inline constexpr std::array<double, 10> kAudiogramFrequencies = {250, 375, 500, 750, 1000, 1500, 2000, 3000, 4000, 6000};
inline constexpr double kMaxThresholdDb = 105.0;

// Hearing thresholds in dB HL at the fixed audiometric frequencies.
struct Audiogram {
  std::array<double, 10> thresholds{};

  // Throws std::invalid_argument unless every threshold lies in [0, 105].
  void validate() const;
  bool is_normal() const;

  // {"frequencies_hz": [...], "thresholds_db_hl": [...]}; the frequency list
  // must equal kAudiogramFrequencies.
  static Audiogram from_json_text(const std::string& text);
  static Audiogram load(const std::filesystem::path& path);
  std::string to_json_text() const;
  void save(const std::filesystem::path& path) const;

  // Ten comma-separated thresholds, e.g. "10,10,20,...".
  static Audiogram parse_list(const std::string& text);

  bool operator==(const Audiogram&) const = default;
};

struct NamedAudiogram {
  std::string name;
  Audiogram audiogram;
};

// NH plus the ten standard audiograms bundled with the library.
const std::vector<NamedAudiogram>& standard_audiograms();
const std::string& standard_audiograms_source();
const Audiogram& standard_audiogram(const std::string& name);

// Piecewise-linear in log frequency with the edge thresholds held outside
// 250-6000 Hz.
std::vector<double> interpolate_audiogram(const Audiogram& a, std::span<const double> center_freqs);

struct HearingLossProfile {
  std::vector<double> hl_total;
  std::vector<double> hl_ohc;
  std::vector<double> hl_ihc;
  std::vector<double> hl_ohc_max;
};

// hl_ohc = min(2/3 hl_total, hl_ohc_max), hl_ihc = hl_total - hl_ohc.
HearingLossProfile split_hearing_loss(std::span<const double> hl_total, std::span<const double> hl_ohc_max);

}  // namespace jnrhlc
