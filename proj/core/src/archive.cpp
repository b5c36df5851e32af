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

#include "jnrhlc/ad/archive.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

namespace jnrhlc::ad {

namespace {

constexpr char kMagic[8] = {'J', 'N', 'R', 'H', 'L', 'C', 'A', 'R'};

static_assert(std::endian::native == std::endian::little, "archive I/O assumes a little-endian host");

class Writer {
 public:
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out.insert(out.end(), b, b + n);
  }
  void u32(std::uint32_t v) { raw(&v, 4); }
  void u64(std::uint64_t v) { raw(&v, 8); }
  void str(const std::string& s) {
    u64(s.size());
    raw(s.data(), s.size());
  }
  std::vector<std::uint8_t> out;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes(b) {}
  void raw(void* p, std::size_t n) {
    if (n > bytes.size() - pos) throw std::runtime_error("archive truncated");
    std::memcpy(p, bytes.data() + pos, n);
    pos += n;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    raw(&v, 4);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    raw(&v, 8);
    return v;
  }
  std::string str() {
    const std::uint64_t n = u64();
    if (n > bytes.size() - pos) throw std::runtime_error("archive truncated");
    std::string s(reinterpret_cast<const char*>(bytes.data() + pos), n);
    pos += n;
    return s;
  }
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;
};

}  // namespace

std::vector<std::uint8_t> Archive::serialize() const {
  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.u32(kFormatVersion);
  w.u64(metadata.size());
  for (const auto& [k, v] : metadata) {
    w.str(k);
    w.str(v);
  }
  w.u64(arrays.size());
  for (const auto& [name, a] : arrays) {
    if (numel(a.shape) != a.values.size()) throw std::logic_error("archive array '" + name + "' has inconsistent shape");
    w.str(name);
    w.u32(static_cast<std::uint32_t>(a.shape.size()));
    for (int d : a.shape) w.u64(static_cast<std::uint64_t>(d));
    w.raw(a.values.data(), a.values.size() * sizeof(double));
  }
  return std::move(w.out);
}

Archive Archive::deserialize(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  char magic[8];
  r.raw(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw std::runtime_error("not a jnrhlc archive");
  const std::uint32_t version = r.u32();
  if (version != kFormatVersion)
    throw std::runtime_error("unsupported archive version " + std::to_string(version));
  Archive a;
  const std::uint64_t n_meta = r.u64();
  for (std::uint64_t i = 0; i < n_meta; ++i) {
    std::string k = r.str();
    a.metadata[k] = r.str();
  }
  const std::uint64_t n_arrays = r.u64();
  for (std::uint64_t i = 0; i < n_arrays; ++i) {
    std::string name = r.str();
    const std::uint32_t rank = r.u32();
    if (rank > 16) throw std::runtime_error("archive array '" + name + "' has implausible rank");
    NamedArray arr;
    std::uint64_t count = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      const std::uint64_t dim = r.u64();
      if (dim > (1ULL << 31)) throw std::runtime_error("archive array '" + name + "' has implausible shape");
      arr.shape.push_back(static_cast<int>(dim));
      count *= dim;
    }
    if (count > (bytes.size() - r.pos) / sizeof(double)) throw std::runtime_error("archive truncated");
    arr.values.resize(count);
    r.raw(arr.values.data(), count * sizeof(double));
    a.arrays.emplace(std::move(name), std::move(arr));
  }
  if (r.pos != bytes.size()) throw std::runtime_error("trailing bytes after archive");
  return a;
}

void Archive::save(const std::filesystem::path& path) const {
  const auto bytes = serialize();
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Archive Archive::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

void Archive::put_params(const std::string& prefix, const ParamSet& params) {
  for (const auto& name : params.names()) arrays[prefix + name] = params.at(name);
}

void Archive::get_params(const std::string& prefix, ParamSet& params) const {
  for (const auto& name : params.names()) {
    auto it = arrays.find(prefix + name);
    if (it == arrays.end()) throw std::runtime_error("archive lacks parameter '" + prefix + name + "'");
    auto& dst = params.at(name);
    if (it->second.shape != dst.shape)
      throw std::runtime_error("archive parameter '" + prefix + name + "' has shape " + shape_str(it->second.shape) +
                               ", expected " + shape_str(dst.shape));
    dst.values = it->second.values;
  }
}

}  // namespace jnrhlc::ad
