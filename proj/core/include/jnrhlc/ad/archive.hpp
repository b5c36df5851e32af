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
#include <map>
#include <span>
#include <string>
#include <vector>

#include "jnrhlc/ad/params.hpp"

namespace jnrhlc::ad {

// Binary checkpoint: magic "JNRHLCAR", a format version, string metadata and
// named row-major double arrays, all little-endian. Doubles are stored as raw
// IEEE-754 bits so a save/load round trip is exact.
struct Archive {
  static constexpr std::uint32_t kFormatVersion = 1;

  std::map<std::string, std::string> metadata;
  std::map<std::string, NamedArray> arrays;

  std::vector<std::uint8_t> serialize() const;
  // Throws std::runtime_error on a malformed or truncated buffer and on an
  // unsupported version.
  static Archive deserialize(std::span<const std::uint8_t> bytes);

  void save(const std::filesystem::path& path) const;
  static Archive load(const std::filesystem::path& path);

  void put_params(const std::string& prefix, const ParamSet& params);
  // Restores every parameter of `params` (shapes must match) from prefix+name.
  void get_params(const std::string& prefix, ParamSet& params) const;

  bool operator==(const Archive&) const = default;
};

}  // namespace jnrhlc::ad
