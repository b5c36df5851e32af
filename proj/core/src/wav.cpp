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

#include "jnrhlc/wav.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

namespace jnrhlc {

namespace {

static_assert(std::endian::native == std::endian::little, "WAV codec assumes a little-endian host");

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

template <typename T>
T load(std::span<const std::uint8_t> bytes, std::size_t offset) {
  if (offset + sizeof(T) > bytes.size()) throw std::invalid_argument("WAV: truncated file");
  T v;
  std::memcpy(&v, bytes.data() + offset, sizeof(T));
  return v;
}

template <typename T>
void store(std::vector<std::uint8_t>& out, T v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + sizeof(T));
}

void store_tag(std::vector<std::uint8_t>& out, const char (&tag)[5]) { out.insert(out.end(), tag, tag + 4); }

bool tag_is(std::span<const std::uint8_t> bytes, std::size_t offset, const char* tag) {
  return offset + 4 <= bytes.size() && std::memcmp(bytes.data() + offset, tag, 4) == 0;
}

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct Chunks {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::uint16_t bits = 0;
  std::size_t data_offset = 0;
  std::size_t data_size = 0;
  std::string comment;
};

Chunks parse(std::span<const std::uint8_t> bytes) {
  if (!tag_is(bytes, 0, "RIFF") || !tag_is(bytes, 8, "WAVE")) throw std::invalid_argument("WAV: not a RIFF/WAVE file");
  Chunks c;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const auto size = load<std::uint32_t>(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (tag_is(bytes, pos, "fmt ")) {
      c.format = load<std::uint16_t>(bytes, body);
      c.channels = load<std::uint16_t>(bytes, body + 2);
      c.rate = load<std::uint32_t>(bytes, body + 4);
      c.bits = load<std::uint16_t>(bytes, body + 14);
      if (c.format == kFormatExtensible) c.format = load<std::uint16_t>(bytes, body + 24);
      have_fmt = true;
    } else if (tag_is(bytes, pos, "data")) {
      c.data_offset = body;
      c.data_size = std::min<std::size_t>(size, bytes.size() - body);
    } else if (tag_is(bytes, pos, "LIST") && tag_is(bytes, body, "INFO")) {
      std::size_t sub = body + 4;
      while (sub + 8 <= body + size && sub + 8 <= bytes.size()) {
        const auto sub_size = load<std::uint32_t>(bytes, sub + 4);
        if (tag_is(bytes, sub, "ICMT")) {
          const char* p = reinterpret_cast<const char*>(bytes.data() + sub + 8);
          std::size_t len = std::min<std::size_t>(sub_size, bytes.size() - sub - 8);
          c.comment.assign(p, strnlen(p, len));
        }
        sub += 8 + sub_size + (sub_size & 1u);
      }
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt || c.data_offset == 0) throw std::invalid_argument("WAV: missing fmt or data chunk");
  return c;
}

}  // namespace

AudioSignal decode_wav(std::span<const std::uint8_t> bytes) {
  const Chunks c = parse(bytes);
  if (c.channels != 1) throw std::invalid_argument("WAV: only mono files are supported");
  if (c.rate != static_cast<std::uint32_t>(kSampleRate))
    throw std::invalid_argument("WAV: sample rate " + std::to_string(c.rate) + " Hz, expected 16000 Hz");
  AudioSignal sig;
  if (c.format == kFormatPcm && c.bits == 16) {
    const std::size_t n = c.data_size / 2;
    sig.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      sig.samples[i] = load<std::int16_t>(bytes, c.data_offset + 2 * i) / 32768.0;
  } else if (c.format == kFormatFloat && c.bits == 32) {
    const std::size_t n = c.data_size / 4;
    sig.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) sig.samples[i] = load<float>(bytes, c.data_offset + 4 * i);
  } else if (c.format == kFormatFloat && c.bits == 64) {
    const std::size_t n = c.data_size / 8;
    sig.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) sig.samples[i] = load<double>(bytes, c.data_offset + 8 * i);
  } else {
    throw std::invalid_argument("WAV: unsupported sample format (need 16-bit PCM or 32/64-bit float)");
  }
  sig.validate();
  return sig;
}

AudioSignal read_wav(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  return decode_wav(bytes);
}

std::vector<std::uint8_t> encode_wav(const AudioSignal& signal, std::string_view comment, WavFormat format) {
  signal.validate();
  const auto n = static_cast<std::uint32_t>(signal.size());
  const std::uint32_t width = format == WavFormat::Float64 ? 8 : 4;
  std::vector<std::uint8_t> info;
  if (!comment.empty()) {
    std::string text(comment);
    text.push_back('\0');
    if (text.size() & 1u) text.push_back('\0');
    store_tag(info, "LIST");
    store<std::uint32_t>(info, static_cast<std::uint32_t>(4 + 8 + text.size()));
    store_tag(info, "INFO");
    store_tag(info, "ICMT");
    store<std::uint32_t>(info, static_cast<std::uint32_t>(text.size()));
    info.insert(info.end(), text.begin(), text.end());
  }
  std::vector<std::uint8_t> out;
  out.reserve(44 + info.size() + width * n);
  store_tag(out, "RIFF");
  store<std::uint32_t>(out, static_cast<std::uint32_t>(4 + (8 + 16) + info.size() + (8 + width * n)));
  store_tag(out, "WAVE");
  store_tag(out, "fmt ");
  store<std::uint32_t>(out, 16);
  store<std::uint16_t>(out, kFormatFloat);
  store<std::uint16_t>(out, 1);
  store<std::uint32_t>(out, kSampleRate);
  store<std::uint32_t>(out, kSampleRate * width);
  store<std::uint16_t>(out, static_cast<std::uint16_t>(width));
  store<std::uint16_t>(out, static_cast<std::uint16_t>(8 * width));
  out.insert(out.end(), info.begin(), info.end());
  store_tag(out, "data");
  store<std::uint32_t>(out, width * n);
  if (format == WavFormat::Float64) {
    for (double v : signal.samples) store<double>(out, v);
  } else {
    for (double v : signal.samples) store<float>(out, static_cast<float>(v));
  }
  return out;
}

void write_wav(const std::filesystem::path& path, const AudioSignal& signal, std::string_view comment,
               WavFormat format) {
  const auto bytes = encode_wav(signal, comment, format);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string read_wav_comment(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  return parse(bytes).comment;
}

}  // namespace jnrhlc
