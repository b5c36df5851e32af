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

#include "jnrhlc/manifest.hpp"

#include <cstdlib>
#include <stdexcept>

#include <json.hpp>

#include "jnrhlc/embedded_data.hpp"

namespace jnrhlc {

using nlohmann::json;

std::string code_version() { return embedded::kCodeVersion; }

RunManifest RunManifest::create(std::string command, std::string config_json, std::string corpus_hash,
                                std::uint64_t seed) {
  RunManifest m;
  m.command = std::move(command);
  try {
    m.config_json = json::parse(config_json).dump();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("run manifest config: ") + e.what());
  }
  m.corpus_hash = std::move(corpus_hash);
  m.code_version = jnrhlc::code_version();
  m.seed = seed;
  return m;
}

std::string RunManifest::to_json_text() const {
  json j;
  j["command"] = command;
  j["config"] = json::parse(config_json);
  j["corpus_hash"] = corpus_hash;
  j["code_version"] = code_version;
  j["seed"] = seed;
  j["outputs"] = outputs;
  return j.dump();
}

RunManifest RunManifest::from_json_text(const std::string& text) {
  RunManifest m;
  try {
    const json j = json::parse(text);
    m.command = j.at("command").get<std::string>();
    m.config_json = j.at("config").dump();
    m.corpus_hash = j.at("corpus_hash").get<std::string>();
    m.code_version = j.at("code_version").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("run manifest: ") + e.what());
  }
  return m;
}

std::filesystem::path default_output_dir() {
  const char* v = std::getenv(kOutputDirEnv);
  if (v != nullptr && *v != '\0') return v;
  return std::filesystem::current_path();
}

}  // namespace jnrhlc
