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
#include <string_view>
#include <vector>

#include "jnrhlc/signal.hpp"

namespace jnrhlc {

// Reads a mono RIFF/WAVE file with 16-bit integer or 32/64-bit float samples.
// Anything else, including a sample rate other than 16 kHz, is rejected with
// std::invalid_argument. 16-bit samples are scaled by 1/32768.
AudioSignal read_wav(const std::filesystem::path& path);
AudioSignal decode_wav(std::span<const std::uint8_t> bytes);

// Float64 keeps samples bit-exact; Float32 is what most players expect.
enum class WavFormat { Float32, Float64 };

// Writes float PCM. A non-empty `comment` is stored in a LIST/INFO ICMT
// chunk, which is how run manifests travel with rendered audio.
void write_wav(const std::filesystem::path& path, const AudioSignal& signal, std::string_view comment = {},
               WavFormat format = WavFormat::Float32);
std::vector<std::uint8_t> encode_wav(const AudioSignal& signal, std::string_view comment = {},
                                     WavFormat format = WavFormat::Float32);

// The ICMT comment of a WAV file, or an empty string.
std::string read_wav_comment(const std::filesystem::path& path);

}  // namespace jnrhlc
