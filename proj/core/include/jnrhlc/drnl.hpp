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

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace jnrhlc {

// Dual-resonance nonlinear filter parameters for one channel. Frequencies and
// bandwidths in Hz. The nonlinear path's broken stick is
// sign(x) min(a |x|, b |x|^c).
struct DrnlChannel {
  double bf = 0.0;
  double lin_fc = 0.0;
  double lin_bw = 0.0;
  double lin_gain = 0.0;
  double lin_lp = 0.0;
  int lin_ngt = 2;
  int lin_nlp = 4;
  double nlin_fc = 0.0;
  double nlin_bw = 0.0;
  double nlin_lp = 0.0;
  double a = 0.0;
  double b = 0.0;
  double c = 0.25;
  int nlin_ngt_before = 2;
  int nlin_ngt_after = 2;
  int nlin_nlp = 1;

  bool operator==(const DrnlChannel&) const = default;
};

struct DrnlParams {
  std::vector<DrnlChannel> channels;
  std::string source;

  // Regression fits log10(p) = p0 + m log10(bf) from the human DRNL
  // literature as used by the computational auditory signal processing
  // model; a and b use bf capped at 1500 Hz.
  static DrnlParams literature(std::span<const double> bfs);

  // Throws std::invalid_argument on non-positive gains or frequencies,
  // c outside (0, 1), or cascade counts below zero.
  void validate() const;

  // One row per channel with a header line; '#' lines are comments.
  static DrnlParams parse_csv(const std::string& text);
  static DrnlParams load_csv(const std::filesystem::path& path);
  std::string to_csv() const;

  bool operator==(const DrnlParams&) const = default;
};

}  // namespace jnrhlc
