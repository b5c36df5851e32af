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

#include "jnrhlc/audiogram.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "jnrhlc/embedded_data.hpp"

namespace jnrhlc {

namespace {

using nlohmann::json;

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open audiogram file " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Audiogram from_array(const std::vector<double>& v, const std::string& what) {
  if (v.size() != kAudiogramFrequencies.size())
    throw std::invalid_argument(what + ": expected 10 thresholds, got " + std::to_string(v.size()));
  Audiogram a;
  std::copy(v.begin(), v.end(), a.thresholds.begin());
  a.validate();
  return a;
}

struct StandardTable {
  std::string source;
  std::vector<NamedAudiogram> profiles;
};

const StandardTable& standard_table() {
  static const StandardTable table = [] {
    const json j = json::parse(embedded::kStandardAudiogramsJson);
    StandardTable t;
    t.source = j.at("source").get<std::string>();
    if (j.at("frequencies_hz").get<std::vector<double>>() !=
        std::vector<double>(kAudiogramFrequencies.begin(), kAudiogramFrequencies.end()))
      throw std::logic_error("bundled audiogram table uses unexpected frequencies");
    for (const auto& p : j.at("profiles")) {
      const auto name = p.at("name").get<std::string>();
      t.profiles.push_back({name, from_array(p.at("thresholds_db_hl").get<std::vector<double>>(), name)});
    }
    return t;
  }();
  return table;
}

}  // namespace

void Audiogram::validate() const {
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    const double t = thresholds[i];
    if (!std::isfinite(t) || t < 0.0 || t > kMaxThresholdDb) {
      std::ostringstream os;
      os << "audiogram threshold " << t << " dB HL at " << kAudiogramFrequencies[i]
         << " Hz is outside [0, 105]";
      throw std::invalid_argument(os.str());
    }
  }
}

bool Audiogram::is_normal() const {
  return std::all_of(thresholds.begin(), thresholds.end(), [](double t) { return t == 0.0; });
}

Audiogram Audiogram::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("audiogram is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("thresholds_db_hl"))
    throw std::invalid_argument("audiogram JSON needs a thresholds_db_hl array");
  if (j.contains("frequencies_hz")) {
    const auto f = j.at("frequencies_hz").get<std::vector<double>>();
    if (f != std::vector<double>(kAudiogramFrequencies.begin(), kAudiogramFrequencies.end()))
      throw std::invalid_argument("audiogram frequencies must be 250,375,500,750,1000,1500,2000,3000,4000,6000 Hz");
  }
  return from_array(j.at("thresholds_db_hl").get<std::vector<double>>(), "audiogram");
}

Audiogram Audiogram::load(const std::filesystem::path& path) { return from_json_text(read_text(path)); }

std::string Audiogram::to_json_text() const {
  json j;
  j["frequencies_hz"] = kAudiogramFrequencies;
  j["thresholds_db_hl"] = thresholds;
  return j.dump(2) + "\n";
}

void Audiogram::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_json_text();
}

Audiogram Audiogram::parse_list(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double t;
    try {
      t = std::stod(item, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("audiogram value '" + item + "' is not a number");
    }
    if (item.find_first_not_of(" \t", used) != std::string::npos)
      throw std::invalid_argument("audiogram value '" + item + "' is not a number");
    v.push_back(t);
  }
  return from_array(v, "audiogram list");
}

const std::vector<NamedAudiogram>& standard_audiograms() { return standard_table().profiles; }

const std::string& standard_audiograms_source() { return standard_table().source; }

const Audiogram& standard_audiogram(const std::string& name) {
  for (const auto& p : standard_audiograms())
    if (p.name == name) return p.audiogram;
  throw std::invalid_argument("unknown standard audiogram '" + name + "'");
}

std::vector<double> interpolate_audiogram(const Audiogram& a, std::span<const double> center_freqs) {
  const auto& f = kAudiogramFrequencies;
  std::vector<double> out;
  out.reserve(center_freqs.size());
  for (double fc : center_freqs) {
    if (!(fc > 0.0)) throw std::invalid_argument("interpolate_audiogram: frequencies must be positive");
    if (fc <= f.front()) {
      out.push_back(a.thresholds.front());
      continue;
    }
    if (fc >= f.back()) {
      out.push_back(a.thresholds.back());
      continue;
    }
    const auto hi = static_cast<std::size_t>(std::upper_bound(f.begin(), f.end(), fc) - f.begin());
    const std::size_t lo = hi - 1;
    if (fc == f[lo]) {
      out.push_back(a.thresholds[lo]);
      continue;
    }
    const double w = std::log(fc / f[lo]) / std::log(f[hi] / f[lo]);
    out.push_back(a.thresholds[lo] + w * (a.thresholds[hi] - a.thresholds[lo]));
  }
  return out;
}

HearingLossProfile split_hearing_loss(std::span<const double> hl_total, std::span<const double> hl_ohc_max) {
  if (hl_total.size() != hl_ohc_max.size())
    throw std::invalid_argument("split_hearing_loss: channel count mismatch");
  HearingLossProfile p;
  p.hl_total.assign(hl_total.begin(), hl_total.end());
  p.hl_ohc_max.assign(hl_ohc_max.begin(), hl_ohc_max.end());
  for (std::size_t i = 0; i < hl_total.size(); ++i) {
    if (!(hl_total[i] >= 0.0)) throw std::invalid_argument("split_hearing_loss: negative total hearing loss");
    const double ohc = std::min(2.0 / 3.0 * hl_total[i], hl_ohc_max[i]);
    p.hl_ohc.push_back(ohc);
    p.hl_ihc.push_back(hl_total[i] - ohc);
  }
  return p;
}

}  // namespace jnrhlc
