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

#include "jnrhlc/scene.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "jnrhlc/fft.hpp"
#include "jnrhlc/wav.hpp"

namespace jnrhlc {

using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;

std::string role_name(SourceRole r) { return r == SourceRole::Speech ? "speech" : "noise"; }

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

double energy(std::span<const double> x) {
  double e = 0.0;
  for (double v : x) e += v * v;
  return e;
}

void scale_to_rms(std::vector<double>& x, double rms) {
  const double cur = std::sqrt(energy(x) / static_cast<double>(x.size()));
  if (cur > 0.0)
    for (double& v : x) v *= rms / cur;
}

// Spectral amplitude shaping of a real signal through one FFT.
std::vector<double> shape_spectrum(const std::vector<double>& x, const std::function<double(double)>& gain) {
  const int n = fast_fft_size(static_cast<int>(x.size()));
  RealFft fft(n);
  std::vector<std::complex<double>> spec(static_cast<std::size_t>(fft.bins()));
  fft.forward(x, spec);
  for (int k = 0; k < fft.bins(); ++k) spec[static_cast<std::size_t>(k)] *= gain(static_cast<double>(k) * kSampleRate / n);
  std::vector<double> out(x.size());
  fft.inverse(spec, out);
  for (double& v : out) v /= n;
  return out;
}

// Long-term speech spectrum: flat to 500 Hz, then about -9 dB per octave,
// with a gentle high-pass below 100 Hz.
double speech_shape(double f) {
  const double hp = f / std::hypot(f, 100.0);
  return hp / (1.0 + std::pow(f / 500.0, 1.5));
}

std::vector<double> synthetic_speech(PortableRng& rng, int n) {
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  const double f0_base = rng.uniform(90.0, 220.0);
  const double drift_rate = rng.uniform(0.3, 1.0);
  const double drift_phase = rng.uniform(0.0, 2.0 * kPi);

  // Syllables: formant targets and an amplitude envelope, with pauses.
  struct Syllable {
    int start, length;
    double f1, f2, f3, level;
  };
  std::vector<Syllable> syl;
  int pos = static_cast<int>(rng.uniform(0.0, 0.1) * kSampleRate);
  while (pos < n) {
    const int len = static_cast<int>(rng.uniform(0.12, 0.3) * kSampleRate);
    syl.push_back({pos, len, rng.uniform(300.0, 900.0), rng.uniform(900.0, 2500.0), rng.uniform(2400.0, 3500.0),
                   rng.uniform(0.5, 1.0)});
    pos += len;
    if (rng.uniform() < 0.25) pos += static_cast<int>(rng.uniform(0.1, 0.35) * kSampleRate);
  }

  std::vector<double> env(static_cast<std::size_t>(n), 0.0), f1(static_cast<std::size_t>(n), 500.0),
      f2(static_cast<std::size_t>(n), 1500.0), f3(static_cast<std::size_t>(n), 2800.0);
  for (const auto& s : syl) {
    for (int i = 0; i < s.length && s.start + i < n; ++i) {
      const auto idx = static_cast<std::size_t>(s.start + i);
      env[idx] = s.level * std::sin(kPi * i / s.length);
      f1[idx] = s.f1;
      f2[idx] = s.f2;
      f3[idx] = s.f3;
    }
  }
  // Smooth the formant tracks with a one-pole filter (about 20 ms).
  const double k = std::exp(-1.0 / (0.02 * kSampleRate));
  for (auto* track : {&f1, &f2, &f3})
    for (int i = 1; i < n; ++i) (*track)[static_cast<std::size_t>(i)] = k * (*track)[static_cast<std::size_t>(i) - 1] +
                                                                        (1.0 - k) * (*track)[static_cast<std::size_t>(i)];

  auto resonance = [](double f, double fc, double bw) { return 1.0 / (1.0 + std::pow((f - fc) / bw, 2.0)); };
  const int max_harmonics = static_cast<int>(7000.0 / (0.8 * f0_base));
  std::vector<double> phase(static_cast<std::size_t>(max_harmonics), 0.0);
  for (auto& p : phase) p = rng.uniform(0.0, 2.0 * kPi);
  for (int i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    if (env[idx] == 0.0) {
      // Keep the harmonic phases running through pauses.
      const double f0 = f0_base * (1.0 + 0.1 * std::sin(2.0 * kPi * drift_rate * i / kSampleRate + drift_phase));
      for (int h = 0; h < max_harmonics; ++h) phase[static_cast<std::size_t>(h)] += 2.0 * kPi * f0 * (h + 1) / kSampleRate;
      continue;
    }
    const double f0 = f0_base * (1.0 + 0.1 * std::sin(2.0 * kPi * drift_rate * i / kSampleRate + drift_phase));
    double acc = 0.0;
    for (int h = 0; h < max_harmonics; ++h) {
      const double f = f0 * (h + 1);
      auto& ph = phase[static_cast<std::size_t>(h)];
      ph += 2.0 * kPi * f / kSampleRate;
      if (f >= 7500.0) continue;
      const double amp = (resonance(f, f1[idx], 90.0) + 0.7 * resonance(f, f2[idx], 120.0) +
                          0.4 * resonance(f, f3[idx], 180.0) + 0.02) /
                         std::sqrt(static_cast<double>(h + 1));
      acc += amp * std::sin(ph);
    }
    out[idx] = env[idx] * acc;
  }
  for (auto& p : phase) p = std::fmod(p, 2.0 * kPi);
  scale_to_rms(out, 0.05);
  return out;
}

std::vector<double> synthetic_noise(PortableRng& rng, int kind, int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (double& v : w) v = rng.normal();
  switch (kind) {
    case 0:  // white
      break;
    case 1:  // speech-shaped
      w = shape_spectrum(w, speech_shape);
      break;
    case 2: {  // speech-shaped noise with a 2-8 Hz amplitude modulation
      w = shape_spectrum(w, speech_shape);
      const double rate = rng.uniform(2.0, 8.0);
      const double phase = rng.uniform(0.0, 2.0 * kPi);
      for (int i = 0; i < n; ++i)
        w[static_cast<std::size_t>(i)] *= 1.0 + 0.8 * std::sin(2.0 * kPi * rate * i / kSampleRate + phase);
      break;
    }
    default: {  // mains hum with harmonics plus a few steady tones over faint noise
      const double mains = rng.uniform() < 0.5 ? 50.0 : 60.0;
      std::vector<double> tones;
      for (int h = 1; h <= 8; ++h) tones.push_back(mains * h);
      for (int t = 0; t < 3; ++t) tones.push_back(rng.uniform(300.0, 6000.0));
      std::vector<double> phases;
      for (std::size_t t = 0; t < tones.size(); ++t) phases.push_back(rng.uniform(0.0, 2.0 * kPi));
      for (int i = 0; i < n; ++i) {
        double acc = 0.05 * w[static_cast<std::size_t>(i)];
        for (std::size_t t = 0; t < tones.size(); ++t)
          acc += std::sin(2.0 * kPi * tones[t] * i / kSampleRate + phases[t]) / (1.0 + static_cast<double>(t % 8));
        w[static_cast<std::size_t>(i)] = acc;
      }
      break;
    }
  }
  scale_to_rms(w, 0.05);
  return w;
}

// Segment of `len` samples at `offset`, zero-padded past the end.
AudioSignal segment(const AudioSignal& s, std::size_t offset, int len) {
  std::vector<double> out(static_cast<std::size_t>(len), 0.0);
  for (std::size_t i = 0; i < out.size() && offset + i < s.size(); ++i) out[i] = s.samples[offset + i];
  return AudioSignal(std::move(out));
}

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

// ---------------------------------------------------------------- corpus

Corpus::Corpus(std::vector<CorpusEntry> entries) : entries_(std::move(entries)) {
  for (const auto& e : entries_) {
    e.audio.validate();
    if (e.split != "train" && e.split != "test")
      throw std::invalid_argument("corpus entry " + e.name + ": split must be train or test");
  }
}

Corpus Corpus::load(const std::filesystem::path& dir) {
  const auto manifest = dir / "manifest.csv";
  if (!std::filesystem::exists(manifest)) throw std::invalid_argument("corpus: no manifest.csv in " + dir.string());
  std::istringstream in(read_text(manifest));
  std::string line;
  std::vector<CorpusEntry> entries;
  bool header = true;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cols;
    std::stringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) cols.push_back(trim(c));
    if (header) {
      if (cols != std::vector<std::string>{"path", "role", "split"})
        throw std::invalid_argument("corpus manifest: header must be path,role,split");
      header = false;
      continue;
    }
    if (cols.size() != 3) throw std::invalid_argument("corpus manifest line " + std::to_string(line_no) + ": 3 columns expected");
    CorpusEntry e;
    e.name = cols[0];
    if (cols[1] == "speech") e.role = SourceRole::Speech;
    else if (cols[1] == "noise") e.role = SourceRole::Noise;
    else throw std::invalid_argument("corpus manifest line " + std::to_string(line_no) + ": role must be speech or noise");
    e.split = cols[2];
    e.audio = read_wav(dir / cols[0]);
    entries.push_back(std::move(e));
  }
  if (entries.empty()) throw std::invalid_argument("corpus: manifest lists no files");
  return Corpus(std::move(entries));
}

Corpus Corpus::synthetic(std::uint64_t seed, int speech_items, int noise_items, double seconds) {
  if (speech_items < 2 || noise_items < 2 || !(seconds > 0.0))
    throw std::invalid_argument("synthetic corpus: need at least two items per role and a positive duration");
  const int n = static_cast<int>(std::lround(seconds * kSampleRate));
  std::vector<CorpusEntry> entries;
  auto split_for = [](int i, int count) { return i < std::max(1, count * 3 / 4) ? "train" : "test"; };
  for (int i = 0; i < speech_items; ++i) {
    PortableRng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    char name[48];
    std::snprintf(name, sizeof name, "synthetic/speech_%03d.wav", i);
    entries.push_back({name, SourceRole::Speech, split_for(i, speech_items), AudioSignal(synthetic_speech(rng, n))});
  }
  static const char* kKinds[] = {"white", "ssn", "modulated", "hum"};
  for (int i = 0; i < noise_items; ++i) {
    PortableRng rng(derive_seed(seed, 1000000 + static_cast<std::uint64_t>(i)));
    char name[48];
    std::snprintf(name, sizeof name, "synthetic/noise_%03d_%s.wav", i, kKinds[i % 4]);
    entries.push_back({name, SourceRole::Noise, split_for(i, noise_items), AudioSignal(synthetic_noise(rng, i % 4, n))});
  }
  return Corpus(std::move(entries));
}

void Corpus::save(const std::filesystem::path& dir, const std::string& run_manifest) const {
  std::filesystem::create_directories(dir);
  std::ostringstream manifest;
  if (!run_manifest.empty()) manifest << "# manifest: " << run_manifest << '\n';
  manifest << "path,role,split\n";
  for (const auto& e : entries_) {
    auto rel = std::filesystem::path(e.name);
    if (rel.is_absolute()) rel = rel.filename();
    std::filesystem::create_directories((dir / rel).parent_path());
    write_wav(dir / rel, e.audio, run_manifest);
    manifest << rel.generic_string() << ',' << role_name(e.role) << ',' << e.split << '\n';
  }
  write_text(dir / "manifest.csv", manifest.str());
}

std::vector<std::size_t> Corpus::select(SourceRole role, const std::string& split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].role == role && entries_[i].split == split) out.push_back(i);
  return out;
}

std::string Corpus::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& e : entries_) {
    const std::string head = e.name + '\n' + role_name(e.role) + '\n' + e.split + '\n';
    h = fnv1a(h, head.data(), head.size());
    h = fnv1a(h, e.audio.samples.data(), e.audio.samples.size() * sizeof(double));
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------- rooms

std::vector<double> synthetic_rir(double t60, std::uint64_t seed) {
  if (!(t60 >= 0.05 && t60 <= 1.0)) throw std::invalid_argument("synthetic_rir: t60 must lie in [0.05, 1] s");
  PortableRng rng(seed);
  const int n = static_cast<int>(std::ceil(t60 * kSampleRate)) + 1;
  // Amplitude decay exp(-d i) gives energy 10^-6 after t60 seconds.
  const double d = 3.0 * std::log(10.0) / (t60 * kSampleRate);
  // Tail energy sum sigma^2 exp(-2 d i) ~ sigma^2 / (2 d) set to 1.
  const double sigma = std::sqrt(2.0 * d);
  std::vector<double> h(static_cast<std::size_t>(n));
  h[0] = 1.0;
  for (int i = 1; i < n; ++i) h[static_cast<std::size_t>(i)] = sigma * std::exp(-d * i) * rng.normal();
  return h;
}

RirProvider synthetic_rir_provider() { return [](double t60, std::uint64_t seed) { return synthetic_rir(t60, seed); }; }

RirProvider anechoic_provider() {
  return [](double, std::uint64_t) { return std::vector<double>{1.0}; };
}

AudioSignal convolve_rir(const AudioSignal& x, std::span<const double> rir) {
  if (rir.empty()) throw std::invalid_argument("convolve_rir: empty impulse response");
  std::vector<double> out(x.size());
  if (rir.size() == 1) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = rir[0] * x.samples[i];
  } else {
    const FirBank bank({std::vector<double>(rir.begin(), rir.end())});
    bank.apply_shared(x.samples, out, 1);
  }
  return AudioSignal(std::move(out));
}

AudioSignal early_target(const AudioSignal& speech, std::span<const double> rir, double boundary_ms) {
  if (rir.empty()) throw std::invalid_argument("early_target: empty impulse response");
  std::size_t peak = 0;
  for (std::size_t i = 1; i < rir.size(); ++i)
    if (std::abs(rir[i]) > std::abs(rir[peak])) peak = i;
  const auto keep = std::min(rir.size(), peak + static_cast<std::size_t>(std::lround(boundary_ms * kSampleRate / 1000.0)) + 1);
  return convolve_rir(speech, rir.first(keep));
}

AudioSignal mix_at_snr(const AudioSignal& speech, const AudioSignal& noise, double snr_db) {
  const double es = energy(speech.samples);
  const double en = energy(noise.samples);
  if (!(es > 0.0) || !(en > 0.0)) throw std::invalid_argument("mix_at_snr: zero-energy source");
  const double g = std::sqrt(es / (en * std::pow(10.0, snr_db / 10.0)));
  std::vector<double> out(noise.samples);
  for (double& v : out) v *= g;
  return AudioSignal(std::move(out));
}

// ---------------------------------------------------------------- audiograms

NamedAudiogram AudiogramSampler::sample(PortableRng& rng) const {
  if (profiles.empty()) throw std::invalid_argument("audiogram sampler: no profiles");
  const auto& p = profiles[rng.below(profiles.size())];
  NamedAudiogram out = p;
  for (double& t : out.audiogram.thresholds)
    t = std::clamp(t + rng.uniform(-jitter_db, jitter_db), 0.0, kMaxThresholdDb);
  return out;
}

// ---------------------------------------------------------------- scenes

int SceneConfig::scene_samples() const { return static_cast<int>(std::lround(scene_seconds * kSampleRate)); }

void SceneConfig::validate() const {
  if (!(snr_min_db <= snr_max_db)) throw std::invalid_argument("scene config: snr range is empty");
  if (max_noise_sources < 1) throw std::invalid_argument("scene config: at least one noise source");
  if (!(t60_min >= 0.05 && t60_min <= t60_max && t60_max <= 1.0))
    throw std::invalid_argument("scene config: t60 range must lie within [0.05, 1] s");
  if (!(reflection_boundary_ms >= 0.0)) throw std::invalid_argument("scene config: negative reflection boundary");
  if (!(scene_seconds > 0.0) || scene_samples() < StftConfig{}.frame_len)
    throw std::invalid_argument("scene config: scene must be at least one STFT frame long");
  if (split != "train" && split != "test") throw std::invalid_argument("scene config: split must be train or test");
}

std::string SceneConfig::to_json_text() const {
  json j;
  j["snr_min_db"] = snr_min_db;
  j["snr_max_db"] = snr_max_db;
  j["max_noise_sources"] = max_noise_sources;
  j["t60_min"] = t60_min;
  j["t60_max"] = t60_max;
  j["reflection_boundary_ms"] = reflection_boundary_ms;
  j["scene_seconds"] = scene_seconds;
  j["split"] = split;
  j["seed"] = seed;
  return j.dump();
}

SceneConfig SceneConfig::from_json_text(const std::string& text) {
  SceneConfig c;
  try {
    const json j = json::parse(text);
    c.snr_min_db = j.at("snr_min_db").get<double>();
    c.snr_max_db = j.at("snr_max_db").get<double>();
    c.max_noise_sources = j.at("max_noise_sources").get<int>();
    c.t60_min = j.at("t60_min").get<double>();
    c.t60_max = j.at("t60_max").get<double>();
    c.reflection_boundary_ms = j.at("reflection_boundary_ms").get<double>();
    c.scene_seconds = j.at("scene_seconds").get<double>();
    c.split = j.at("split").get<std::string>();
    c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("scene config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string SceneMetadata::to_json_text() const {
  json j;
  j["seed"] = seed;
  j["index"] = index;
  j["speech"] = speech;
  j["speech_offset"] = speech_offset;
  j["noises"] = noises;
  j["noise_offsets"] = noise_offsets;
  j["snrs_db"] = snrs_db;
  j["t60"] = t60;
  j["gain"] = gain;
  j["profile"] = profile;
  return j.dump();
}

SceneMetadata SceneMetadata::from_json_text(const std::string& text) {
  SceneMetadata m;
  try {
    const json j = json::parse(text);
    m.seed = j.at("seed").get<std::uint64_t>();
    m.index = j.at("index").get<std::uint64_t>();
    m.speech = j.at("speech").get<std::string>();
    m.speech_offset = j.at("speech_offset").get<std::size_t>();
    m.noises = j.at("noises").get<std::vector<std::string>>();
    m.noise_offsets = j.at("noise_offsets").get<std::vector<std::size_t>>();
    m.snrs_db = j.at("snrs_db").get<std::vector<double>>();
    m.t60 = j.at("t60").get<double>();
    m.gain = j.at("gain").get<double>();
    m.profile = j.at("profile").get<std::string>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("scene metadata: ") + e.what());
  }
  return m;
}

namespace {

constexpr int kMaxDraws = 10;

// A non-silent segment of a random entry from `pool`.
std::pair<std::size_t, std::size_t> draw_segment(PortableRng& rng, const Corpus& corpus,
                                                 const std::vector<std::size_t>& pool, int len, AudioSignal& out) {
  for (int attempt = 0; attempt < kMaxDraws; ++attempt) {
    const auto idx = pool[rng.below(pool.size())];
    const auto& audio = corpus.at(idx).audio;
    const std::size_t span = audio.size() > static_cast<std::size_t>(len) ? audio.size() - len : 0;
    const std::size_t offset = span > 0 ? rng.below(span + 1) : 0;
    out = segment(audio, offset, len);
    if (energy(out.samples) > 0.0) return {idx, offset};
  }
  throw std::runtime_error("scene generation: " + std::to_string(kMaxDraws) + " silent segments in a row");
}

}  // namespace

Scene generate_scene(const SceneConfig& cfg, const Corpus& corpus, const RirProvider& rirs,
                     const AudiogramSampler& sampler, std::uint64_t index) {
  cfg.validate();
  const auto speech_pool = corpus.select(SourceRole::Speech, cfg.split);
  const auto noise_pool = corpus.select(SourceRole::Noise, cfg.split);
  if (speech_pool.empty() || noise_pool.empty())
    throw std::invalid_argument("scene generation: corpus has no " + cfg.split + " speech or noise");

  PortableRng rng(derive_seed(cfg.seed, index));
  const int len = cfg.scene_samples();
  Scene s;
  s.meta.seed = cfg.seed;
  s.meta.index = index;

  AudioSignal speech;
  const auto [speech_idx, speech_off] = draw_segment(rng, corpus, speech_pool, len, speech);
  s.meta.speech = corpus.at(speech_idx).name;
  s.meta.speech_offset = speech_off;

  const int sources = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.max_noise_sources)));
  s.meta.t60 = rng.uniform(cfg.t60_min, cfg.t60_max);
  const auto speech_rir = rirs(s.meta.t60, rng.below(~0ULL));
  s.reverberant_speech = convolve_rir(speech, speech_rir);
  s.y = early_target(speech, speech_rir, cfg.reflection_boundary_ms);
  if (!(energy(s.reverberant_speech.samples) > 0.0)) throw std::runtime_error("scene generation: silent reverberant speech");

  for (int k = 0; k < sources; ++k) {
    AudioSignal noise;
    const auto [noise_idx, noise_off] = draw_segment(rng, corpus, noise_pool, len, noise);
    const double snr = rng.uniform(cfg.snr_min_db, cfg.snr_max_db);
    const auto rir = rirs(s.meta.t60, rng.below(~0ULL));
    s.noises.push_back(mix_at_snr(s.reverberant_speech, convolve_rir(noise, rir), snr));
    s.meta.noises.push_back(corpus.at(noise_idx).name);
    s.meta.noise_offsets.push_back(noise_off);
    s.meta.snrs_db.push_back(snr);
  }

  const auto profile = sampler.sample(rng);
  s.a = profile.audiogram;
  s.meta.profile = profile.name;

  std::vector<double> x(s.reverberant_speech.samples);
  for (const auto& n : s.noises)
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += n.samples[i];
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  if (!(peak > 0.0)) throw std::runtime_error("scene generation: silent mixture");
  const double g = 0.5 / peak;
  s.meta.gain = g;
  for (double& v : x) v *= g;
  s.x = AudioSignal(std::move(x));
  for (double& v : s.y.samples) v *= g;
  for (double& v : s.reverberant_speech.samples) v *= g;
  for (auto& n : s.noises)
    for (double& v : n.samples) v *= g;
  return s;
}

void freeze_test_set(const SceneConfig& cfg, const Corpus& corpus, const RirProvider& rirs,
                     const AudiogramSampler& sampler, int n, const std::filesystem::path& dir,
                     const std::string& manifest) {
  if (n < 1) throw std::invalid_argument("freeze_test_set: n must be positive");
  const json man = json::parse(manifest);
  std::filesystem::create_directories(dir);
  for (int i = 0; i < n; ++i) {
    const auto scene = generate_scene(cfg, corpus, rirs, sampler, static_cast<std::uint64_t>(i));
    char name[32];
    std::snprintf(name, sizeof name, "scene_%04d", i);
    const auto sd = dir / name;
    std::filesystem::create_directories(sd);
    write_wav(sd / "x.wav", scene.x, manifest);
    write_wav(sd / "y.wav", scene.y, manifest);
    json a = json::parse(scene.a.to_json_text());
    a["profile"] = scene.meta.profile;
    a["manifest"] = man;
    write_text(sd / "audiogram.json", a.dump(2) + "\n");
    json meta = json::parse(scene.meta.to_json_text());
    meta["scene_config"] = json::parse(cfg.to_json_text());
    meta["manifest"] = man;
    write_text(sd / "metadata.json", meta.dump(2) + "\n");
  }
}

std::vector<Scene> load_test_set(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw std::invalid_argument("test set directory not found: " + dir.string());
  std::vector<std::filesystem::path> scenes;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_directory() && e.path().filename().string().rfind("scene_", 0) == 0) scenes.push_back(e.path());
  std::sort(scenes.begin(), scenes.end());
  if (scenes.empty()) throw std::invalid_argument("no scene_* directories in " + dir.string());
  std::vector<Scene> out;
  for (const auto& sd : scenes) {
    Scene s;
    s.x = read_wav(sd / "x.wav");
    s.y = read_wav(sd / "y.wav");
    s.a = Audiogram::load(sd / "audiogram.json");
    s.meta = SceneMetadata::from_json_text(read_text(sd / "metadata.json"));
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace jnrhlc
