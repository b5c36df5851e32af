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
#include <string>
#include <vector>

namespace jnrhlc {

// Provenance record written into every artifact a command produces.
struct RunManifest {
  std::string command;
  std::string config_json = "{}";  // snapshot of the effective configuration (a JSON object)
  std::string corpus_hash;         // empty when no corpus was involved
  std::string code_version;
  std::uint64_t seed = 0;
  std::vector<std::string> outputs;

  // Fills code_version from the build.
  static RunManifest create(std::string command, std::string config_json, std::string corpus_hash, std::uint64_t seed);

  std::string to_json_text() const;
  // Throws std::invalid_argument on malformed text.
  static RunManifest from_json_text(const std::string& text);

  bool operator==(const RunManifest&) const = default;
};

std::string code_version();

inline constexpr const char* kOutputDirEnv = "JNRHLC_OUTPUT_DIR";

// $JNRHLC_OUTPUT_DIR if set and non-empty, otherwise the current directory.
std::filesystem::path default_output_dir();

}  // namespace jnrhlc
