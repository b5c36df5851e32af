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

#include "run_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace jnrhlc::cli {

using nlohmann::json;

namespace {

std::string valid_keys(const json& defaults) {
  std::string out;
  for (auto it = defaults.begin(); it != defaults.end(); ++it) out += (out.empty() ? "" : ", ") + it.key();
  return out;
}

// Overlays `user` onto the full default object of one section.
json overlay(const std::string& section, json defaults, const json& user, const std::vector<std::string>& forbidden = {}) {
  if (!user.is_object()) throw UsageError("config: section '" + section + "' must be an object");
  for (auto it = user.begin(); it != user.end(); ++it) {
    for (const auto& f : forbidden)
      if (it.key() == f) throw UsageError("config: " + section + "." + f + " is set by the training mode");
    if (!defaults.contains(it.key()))
      throw UsageError("config: unknown key '" + section + "." + it.key() + "' (valid: " + valid_keys(defaults) + ")");
    defaults[it.key()] = it.value();
  }
  return defaults;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read config file " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

ProcessorConfig tiny_processor_config() {
  ProcessorConfig c;
  c.bands.edges_hz = {0.0, 1000.0, 4000.0, 8000.0};
  c.channels = 4;
  c.layers = 1;
  return c;
}

ProcessorConfig processor_preset(const std::string& name) {
  if (name == "tiny") return tiny_processor_config();
  if (name == "desk") return ProcessorConfig::desk({Head::NR}, false);
  if (name == "full") return ProcessorConfig::full({Head::NR}, false);
  throw UsageError("unknown processor preset '" + name + "' (tiny, desk or full)");
}

RunConfig RunConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw UsageError("config: top level must be an object");
  static const std::vector<std::string> sections{"train", "scenes", "processor", "corpus", "synthetic_corpus",
                                                 "checkpoint_every_scenes"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(sections.begin(), sections.end(), it.key()) == sections.end()) {
      std::string all;
      for (const auto& s : sections) all += (all.empty() ? "" : ", ") + s;
      throw UsageError("config: unknown section '" + it.key() + "' (valid: " + all + ")");
    }

  RunConfig c;
  try {
    if (j.contains("train")) {
      c.loss_given = j["train"].is_object() && j["train"].contains("loss");
      c.train = TrainConfig::from_json_text(overlay("train", json::parse(c.train.to_json_text()), j["train"]).dump());
    }
    if (j.contains("scenes")) {
      c.split_given = j["scenes"].is_object() && j["scenes"].contains("split");
      c.scenes = SceneConfig::from_json_text(overlay("scenes", json::parse(c.scenes.to_json_text()), j["scenes"]).dump());
    }
    if (j.contains("processor")) {
      json user = j["processor"];
      if (!user.is_object()) throw UsageError("config: section 'processor' must be an object");
      if (user.contains("preset")) {
        c.processor_preset = user["preset"].get<std::string>();
        user.erase("preset");
      }
      json base = json::parse(cli::processor_preset(c.processor_preset).to_json_text());
      base.erase("stft_frame");
      base.erase("stft_hop");
      json merged = overlay("processor", base, user, {"heads", "audiogram_conditioning"});
      merged["stft_frame"] = 512;
      merged["stft_hop"] = 256;
      c.processor = ProcessorConfig::from_json_text(merged.dump());
    }
    if (j.contains("corpus")) c.corpus = j["corpus"].get<std::string>();
    if (j.contains("synthetic_corpus")) {
      const json d{{"seed", c.synthetic_corpus.seed},
                   {"speech_items", c.synthetic_corpus.speech_items},
                   {"noise_items", c.synthetic_corpus.noise_items},
                   {"seconds", c.synthetic_corpus.seconds}};
      const json m = overlay("synthetic_corpus", d, j["synthetic_corpus"]);
      c.synthetic_corpus.seed = m["seed"].get<std::uint64_t>();
      c.synthetic_corpus.speech_items = m["speech_items"].get<int>();
      c.synthetic_corpus.noise_items = m["noise_items"].get<int>();
      c.synthetic_corpus.seconds = m["seconds"].get<double>();
    }
    if (j.contains("checkpoint_every_scenes")) c.checkpoint_every_scenes = j["checkpoint_every_scenes"].get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) { return from_json_text(read_file(path)); }

std::string RunConfig::to_json_text() const {
  json j;
  j["train"] = json::parse(train.to_json_text());
  j["scenes"] = json::parse(scenes.to_json_text());
  json p = json::parse(processor.to_json_text());
  // Heads and conditioning follow from the mode; the STFT is fixed.
  for (const char* k : {"heads", "audiogram_conditioning", "stft_frame", "stft_hop"}) p.erase(k);
  p["preset"] = processor_preset;
  j["processor"] = p;
  j["corpus"] = corpus;
  j["synthetic_corpus"] = {{"seed", synthetic_corpus.seed},
                           {"speech_items", synthetic_corpus.speech_items},
                           {"noise_items", synthetic_corpus.noise_items},
                           {"seconds", synthetic_corpus.seconds}};
  j["checkpoint_every_scenes"] = checkpoint_every_scenes;
  return j.dump();
}

Corpus open_corpus(const std::string& source, const SyntheticCorpusSpec& spec) {
  if (source == "synthetic") return Corpus::synthetic(spec.seed, spec.speech_items, spec.noise_items, spec.seconds);
  if (!std::filesystem::is_directory(source)) throw std::runtime_error("corpus directory " + source + " does not exist");
  return Corpus::load(source);
}

Audiogram resolve_audiogram(const std::string& text) {
  if (text.find(',') != std::string::npos) return Audiogram::parse_list(text);
  if (std::filesystem::is_regular_file(text)) return Audiogram::load(text);
  for (const auto& p : standard_audiograms())
    if (p.name == text) return p.audiogram;
  throw std::invalid_argument("audiogram '" + text + "' is neither a threshold list, a file, nor a standard profile");
}

std::vector<double> parse_alpha_list(const std::string& text) {
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) throw UsageError("bad alpha value '" + s + "' in '" + text + "'");
    return v;
  };
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> f;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ':')) f.push_back(part);
    if (f.size() != 3) throw UsageError("alpha range must be start:step:stop");
    const double a = number(f[0]), step = number(f[1]), b = number(f[2]);
    if (!(step > 0.0) || b < a) throw UsageError("alpha range needs step > 0 and stop >= start");
    const auto n = static_cast<long>(std::floor((b - a) / step + 1e-9));
    for (long i = 0; i <= n; ++i) out.push_back(std::round((a + static_cast<double>(i) * step) * 1e9) / 1e9);
  } else {
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) out.push_back(number(part));
  }
  if (out.empty()) throw UsageError("empty alpha list");
  for (double v : out)
    if (!(v >= 0.0 && v <= 1.0)) throw UsageError("alpha values must lie in [0, 1]");
  return out;
}

}  // namespace jnrhlc::cli
