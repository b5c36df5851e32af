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
#include <optional>
#include <stdexcept>
#include <string>

#include "jnrhlc/audiogram.hpp"
#include "jnrhlc/processor.hpp"
#include "jnrhlc/scene.hpp"
#include "jnrhlc/trainer.hpp"

namespace jnrhlc::cli {

// Bad flags or flag combinations; exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SyntheticCorpusSpec {
  std::uint64_t seed = 1;
  int speech_items = 16;
  int noise_items = 16;
  double seconds = 4.5;

  bool operator==(const SyntheticCorpusSpec&) const = default;
};

// Everything `train` and `freeze-testset` read from a config file. The file
// is a JSON object with optional sections:
//
//   {"train": {...}, "scenes": {...},
//    "processor": {"preset": "desk", "channels": 16, ...},
//    "corpus": "synthetic" | "<dir>",
//    "synthetic_corpus": {"seed": 1, ...},
//    "checkpoint_every_scenes": 0}
//
// Each section accepts any subset of its keys; missing keys keep the
// defaults and unknown keys are rejected with the list of valid ones.
struct RunConfig {
  TrainConfig train;
  SceneConfig scenes;
  std::string processor_preset = "desk";  // tiny | desk | full
  ProcessorConfig processor = ProcessorConfig::desk({Head::NR}, false);
  std::string corpus = "synthetic";
  SyntheticCorpusSpec synthetic_corpus;
  std::uint64_t checkpoint_every_scenes = 0;  // 0: final checkpoint only
  bool loss_given = false;                    // train.loss appeared in the file
  bool split_given = false;                   // scenes.split appeared in the file

  // Throws UsageError on unknown keys and std::invalid_argument on bad
  // values.
  static RunConfig from_json_text(const std::string& text);
  static RunConfig load(const std::filesystem::path& path);
  // Full snapshot of the effective configuration (every key present).
  std::string to_json_text() const;
};

// K = 3 (0, 1, 4, 8 kHz), N = 4, L = 1.
ProcessorConfig tiny_processor_config();
ProcessorConfig processor_preset(const std::string& name);

// "synthetic" builds the built-in corpus from `spec`; anything else is a
// directory read with Corpus::load.
Corpus open_corpus(const std::string& source, const SyntheticCorpusSpec& spec);

// A comma-separated list of ten thresholds, a path to an audiogram JSON file,
// or the name of a standard profile (NH, N1..N7, S1..S3), tried in that order.
Audiogram resolve_audiogram(const std::string& text);

// "0,0.5,1" or "start:step:stop" (inclusive, rounded to 1e-9).
std::vector<double> parse_alpha_list(const std::string& text);

}  // namespace jnrhlc::cli
