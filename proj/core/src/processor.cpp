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

#include "jnrhlc/processor.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "jnrhlc/ad/lstm.hpp"
#include "jnrhlc/ad/ops.hpp"
#include "jnrhlc/random.hpp"

namespace jnrhlc {

using nlohmann::json;

std::string head_name(Head h) { return h == Head::NR ? "NR" : "HLC"; }

Head parse_head(const std::string& s) {
  std::string u = s;
  std::transform(u.begin(), u.end(), u.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (u == "NR") return Head::NR;
  if (u == "HLC") return Head::HLC;
  throw std::invalid_argument("unknown head '" + s + "' (expected NR or HLC)");
}

BandSplitSpec BandSplitSpec::standard() {
  BandSplitSpec s;
  for (int i = 0; i <= 20; ++i) s.edges_hz.push_back(200.0 * i);
  for (int i = 1; i <= 6; ++i) s.edges_hz.push_back(4000.0 + 500.0 * i);
  s.edges_hz.push_back(8000.0);
  return s;
}

std::vector<std::pair<int, int>> BandSplitSpec::bin_ranges(const StftConfig& stft) const {
  validate(stft);
  const int bins = stft.bins();
  const double df = static_cast<double>(kSampleRate) / stft.frame_len;
  std::vector<std::pair<int, int>> out;
  int bin = 0;
  for (int k = 0; k < bands(); ++k) {
    const int first = bin;
    const bool last = k + 1 == bands();
    while (bin < bins && (last || bin * df < edges_hz[static_cast<std::size_t>(k) + 1])) ++bin;
    out.emplace_back(first, bin - first);
  }
  return out;
}

void BandSplitSpec::validate(const StftConfig& stft) const {
  stft.validate();
  if (edges_hz.size() < 2) throw std::invalid_argument("band split: need at least one band");
  if (edges_hz.front() != 0.0 || edges_hz.back() != kSampleRate / 2.0)
    throw std::invalid_argument("band split: edges must run from 0 to 8000 Hz");
  const double df = static_cast<double>(kSampleRate) / stft.frame_len;
  for (std::size_t i = 1; i < edges_hz.size(); ++i) {
    if (!(edges_hz[i] > edges_hz[i - 1])) throw std::invalid_argument("band split: edges must increase");
    // Some bin centre must fall in [lo, hi) (the last band also holds Nyquist).
    const double lo = std::ceil(edges_hz[i - 1] / df);
    if (i + 1 < edges_hz.size() && !(lo * df < edges_hz[i]))
      throw std::invalid_argument("band split: band " + std::to_string(i - 1) + " contains no bins");
  }
}

ProcessorConfig ProcessorConfig::full(std::vector<Head> heads, bool conditioning) {
  ProcessorConfig c;
  c.channels = 64;
  c.layers = 6;
  c.heads = std::move(heads);
  c.audiogram_conditioning = conditioning;
  return c;
}

ProcessorConfig ProcessorConfig::desk(std::vector<Head> heads, bool conditioning) {
  ProcessorConfig c;
  c.heads = std::move(heads);
  c.audiogram_conditioning = conditioning;
  return c;
}

bool ProcessorConfig::has_head(Head h) const { return std::find(heads.begin(), heads.end(), h) != heads.end(); }

void ProcessorConfig::validate() const {
  bands.validate(stft);
  if (channels < 1) throw std::invalid_argument("processor: channels must be positive");
  if (layers < 0) throw std::invalid_argument("processor: layers must be non-negative");
  if (heads.empty() || heads.size() > 2) throw std::invalid_argument("processor: one or two heads required");
  if (heads.size() == 2 && heads[0] == heads[1]) throw std::invalid_argument("processor: duplicate head");
  if (stft != StftConfig{}) throw std::invalid_argument("processor: only the 512/256 STFT is supported");
}

std::string ProcessorConfig::to_json_text() const {
  json j;
  j["band_edges_hz"] = bands.edges_hz;
  j["channels"] = channels;
  j["layers"] = layers;
  std::vector<std::string> h;
  for (Head x : heads) h.push_back(head_name(x));
  j["heads"] = h;
  j["audiogram_conditioning"] = audiogram_conditioning;
  j["stft_frame"] = stft.frame_len;
  j["stft_hop"] = stft.hop;
  return j.dump();
}

ProcessorConfig ProcessorConfig::from_json_text(const std::string& text) {
  ProcessorConfig c;
  try {
    const json j = json::parse(text);
    c.bands.edges_hz = j.at("band_edges_hz").get<std::vector<double>>();
    c.channels = j.at("channels").get<int>();
    c.layers = j.at("layers").get<int>();
    c.heads.clear();
    for (const auto& h : j.at("heads")) c.heads.push_back(parse_head(h.get<std::string>()));
    c.audiogram_conditioning = j.at("audiogram_conditioning").get<bool>();
    c.stft.frame_len = j.at("stft_frame").get<int>();
    c.stft.hop = j.at("stft_hop").get<int>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("processor config: ") + e.what());
  }
  c.validate();
  return c;
}

namespace {

std::size_t lstm_count(std::size_t in, std::size_t hidden) { return 4 * hidden * (in + hidden + 1); }

std::string band_prefix(int k) { return "band_fc." + std::to_string(k) + "."; }
std::string layer_prefix(int l) { return "layer." + std::to_string(l) + "."; }
std::string film_prefix(int l) { return "film." + std::to_string(l) + "."; }
std::string head_prefix(Head h, int k) { return "head." + head_name(h) + ".band." + std::to_string(k) + "."; }

ad::LstmWeights lstm_weights(const ad::BoundParams& p, const std::string& prefix) {
  ad::LstmWeights w{p[prefix + "w_ih"], p[prefix + "w_hh"], p[prefix + "bias"]};
  return w;
}

// Layer norm over the last axis followed by a learned per-feature affine map.
ad::Tensor norm_affine(const ad::Tensor& x, const ad::Tensor& gain, const ad::Tensor& bias) {
  return ad::add(ad::mul(ad::layer_norm(x), gain), bias);
}

ad::Tensor dense(const ad::Tensor& x, const ad::Tensor& w, const ad::Tensor& b) { return ad::add(ad::matmul(x, w), b); }

}  // namespace

std::size_t processor_param_count(const ProcessorConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.channels;
  const std::size_t k = cfg.bands.bands();
  const std::size_t f = cfg.stft.bins();
  const std::size_t ht = cfg.time_hidden(), hb = cfg.band_hidden(), hm = cfg.mask_hidden();
  // Band split: norm (2w gain + 2w bias) and FC (2w x N + N) per band; the
  // widths sum to F.
  std::size_t total = 4 * f + 2 * f * n + k * n;
  if (cfg.audiogram_conditioning) total += kAudiogramFrequencies.size() * n + n;
  std::size_t layer = 0;
  if (cfg.audiogram_conditioning) layer += 2 * (n * n + n);
  layer += 2 * n + lstm_count(n, ht) + ht * n + n;
  layer += 2 * n + 2 * lstm_count(n, hb) + 2 * hb * n + n;
  total += cfg.layers * layer;
  // Mask MLP per band: N x Hm + Hm, then Hm x 4w + 4w.
  const std::size_t head = k * (n * hm + hm) + hm * 4 * f + 4 * f;
  total += cfg.heads.size() * head;
  return total;
}

ad::ParamSet init_processor_params(const ProcessorConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  PortableRng rng(seed);
  ad::ParamSet ps;
  const int n = cfg.channels;
  auto normal = [&](int rows, int cols, double stddev) {
    std::vector<double> v(static_cast<std::size_t>(rows) * cols);
    for (double& x : v) x = stddev * rng.normal();
    return v;
  };
  auto uniform = [&](std::size_t count, double bound) {
    std::vector<double> v(count);
    for (double& x : v) x = rng.uniform(-bound, bound);
    return v;
  };
  auto constant = [](std::size_t count, double value) { return std::vector<double>(count, value); };
  auto add_lstm = [&](const std::string& prefix, int in, int hidden) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    ps.add(prefix + "w_ih", {in, 4 * hidden}, uniform(static_cast<std::size_t>(in) * 4 * hidden, bound));
    ps.add(prefix + "w_hh", {hidden, 4 * hidden}, uniform(static_cast<std::size_t>(hidden) * 4 * hidden, bound));
    ps.add(prefix + "bias", {4 * hidden}, uniform(static_cast<std::size_t>(4 * hidden), bound));
  };

  const auto ranges = cfg.bands.bin_ranges(cfg.stft);
  for (int k = 0; k < cfg.bands.bands(); ++k) {
    const int in = 2 * ranges[static_cast<std::size_t>(k)].second;
    const auto pre = band_prefix(k);
    ps.add(pre + "norm.gain", {in}, constant(in, 1.0));
    ps.add(pre + "norm.bias", {in}, constant(in, 0.0));
    ps.add(pre + "weight", {in, n}, normal(in, n, 1.0 / std::sqrt(in)));
    ps.add(pre + "bias", {n}, constant(n, 0.0));
  }
  if (cfg.audiogram_conditioning) {
    const int a = static_cast<int>(kAudiogramFrequencies.size());
    ps.add("embed.weight", {a, n}, normal(a, n, 1.0 / std::sqrt(a)));
    ps.add("embed.bias", {n}, constant(n, 0.0));
  }
  const int ht = cfg.time_hidden(), hb = cfg.band_hidden(), hm = cfg.mask_hidden();
  for (int l = 0; l < cfg.layers; ++l) {
    if (cfg.audiogram_conditioning) {
      const auto fp = film_prefix(l);
      ps.add(fp + "gamma.weight", {n, n}, constant(static_cast<std::size_t>(n) * n, 0.0));
      ps.add(fp + "gamma.bias", {n}, constant(n, 0.0));
      ps.add(fp + "beta.weight", {n, n}, constant(static_cast<std::size_t>(n) * n, 0.0));
      ps.add(fp + "beta.bias", {n}, constant(n, 0.0));
    }
    const auto lp = layer_prefix(l);
    ps.add(lp + "time_norm.gain", {n}, constant(n, 1.0));
    ps.add(lp + "time_norm.bias", {n}, constant(n, 0.0));
    add_lstm(lp + "time_lstm.", n, ht);
    ps.add(lp + "time_fc.weight", {ht, n}, normal(ht, n, 1.0 / std::sqrt(ht)));
    ps.add(lp + "time_fc.bias", {n}, constant(n, 0.0));
    ps.add(lp + "band_norm.gain", {n}, constant(n, 1.0));
    ps.add(lp + "band_norm.bias", {n}, constant(n, 0.0));
    add_lstm(lp + "band_lstm.fwd.", n, hb);
    add_lstm(lp + "band_lstm.bwd.", n, hb);
    ps.add(lp + "band_fc.weight", {2 * hb, n}, normal(2 * hb, n, 1.0 / std::sqrt(2 * hb)));
    ps.add(lp + "band_fc.bias", {n}, constant(n, 0.0));
  }
  for (Head h : cfg.heads) {
    for (int k = 0; k < cfg.bands.bands(); ++k) {
      const int w = ranges[static_cast<std::size_t>(k)].second;
      const auto hp = head_prefix(h, k);
      ps.add(hp + "fc1.weight", {n, hm}, normal(n, hm, 1.0 / std::sqrt(n)));
      ps.add(hp + "fc1.bias", {hm}, constant(hm, 0.0));
      // Small output weights so the head starts close to mask 1, residual 0.
      ps.add(hp + "fc2.weight", {hm, 4 * w}, normal(hm, 4 * w, 0.01 / std::sqrt(hm)));
      auto bias = constant(static_cast<std::size_t>(4 * w), 0.0);
      std::fill(bias.begin(), bias.begin() + w, 1.0);
      ps.add(hp + "fc2.bias", {4 * w}, std::move(bias));
    }
  }
  return ps;
}

SpeechProcessor::SpeechProcessor(ProcessorConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  ranges_ = cfg_.bands.bin_ranges(cfg_.stft);
}

ad::Tensor SpeechProcessor::band_split(const ad::BoundParams& p, const ad::Tensor& spec) const {
  if (spec.rank() != 3 || spec.dim(0) != 2 || spec.dim(2) != cfg_.stft.bins())
    throw std::invalid_argument("band_split: expected a [2, T, " + std::to_string(cfg_.stft.bins()) + "] spectrogram, got " +
                                ad::shape_str(spec.shape()));
  const int frames = spec.dim(1);
  std::vector<ad::Tensor> bands;
  for (int k = 0; k < cfg_.bands.bands(); ++k) {
    const auto [first, width] = ranges_[static_cast<std::size_t>(k)];
    const auto pre = band_prefix(k);
    auto b = ad::permute(ad::slice(spec, 2, first, width), {1, 0, 2});  // [T, 2, w]
    b = ad::reshape(b, {frames, 2 * width});
    b = dense(norm_affine(b, p[pre + "norm.gain"], p[pre + "norm.bias"]), p[pre + "weight"], p[pre + "bias"]);
    bands.push_back(ad::reshape(b, {1, frames, cfg_.channels}));
  }
  return ad::concat(bands, 0);
}

ad::Tensor SpeechProcessor::audiogram_embed(const ad::BoundParams& p, ad::Tape& tape, const Audiogram& a) const {
  a.validate();
  std::vector<double> t(a.thresholds.begin(), a.thresholds.end());
  for (double& v : t) v /= kMaxThresholdDb;
  const int n = static_cast<int>(t.size());
  const auto x = tape.constant({1, n}, std::move(t));
  return ad::reshape(ad::tanh(dense(x, p["embed.weight"], p["embed.bias"])), {cfg_.channels});
}

ad::Tensor SpeechProcessor::film(const ad::BoundParams& p, int layer, const ad::Tensor& h, const ad::Tensor& e) const {
  const auto fp = film_prefix(layer);
  const auto row = ad::reshape(e, {1, cfg_.channels});
  const auto gamma = ad::add_scalar(dense(row, p[fp + "gamma.weight"], p[fp + "gamma.bias"]), 1.0);
  const auto beta = dense(row, p[fp + "beta.weight"], p[fp + "beta.bias"]);
  return ad::add(ad::mul(h, gamma), beta);
}

ad::Tensor SpeechProcessor::dual_path_layer(const ad::BoundParams& p, int layer, const ad::Tensor& h) const {
  const auto lp = layer_prefix(layer);
  // Along time: sequences of T frames, one per band.
  auto z = norm_affine(h, p[lp + "time_norm.gain"], p[lp + "time_norm.bias"]);
  z = ad::lstm_sequence(ad::permute(z, {1, 0, 2}), lstm_weights(p, lp + "time_lstm."));
  z = dense(z, p[lp + "time_fc.weight"], p[lp + "time_fc.bias"]);
  auto out = ad::add(h, ad::permute(z, {1, 0, 2}));

  // Along bands: sequences of K bands, one per frame, both directions.
  z = norm_affine(out, p[lp + "band_norm.gain"], p[lp + "band_norm.bias"]);
  const auto fwd = ad::lstm_sequence(z, lstm_weights(p, lp + "band_lstm.fwd."));
  const auto bwd = ad::lstm_sequence(z, lstm_weights(p, lp + "band_lstm.bwd."), true);
  z = dense(ad::concat({fwd, bwd}, 2), p[lp + "band_fc.weight"], p[lp + "band_fc.bias"]);
  return ad::add(out, z);
}

HeadOutput SpeechProcessor::mask_estimate(const ad::BoundParams& p, Head head, const ad::Tensor& h) const {
  if (!cfg_.has_head(head)) throw std::invalid_argument("mask_estimate: head " + head_name(head) + " is not configured");
  const int frames = h.dim(1);
  std::vector<ad::Tensor> parts;
  for (int k = 0; k < cfg_.bands.bands(); ++k) {
    const int width = ranges_[static_cast<std::size_t>(k)].second;
    const auto hp = head_prefix(head, k);
    const auto hk = ad::reshape(ad::slice(h, 0, k, 1), {frames, cfg_.channels});
    auto o = ad::tanh(dense(hk, p[hp + "fc1.weight"], p[hp + "fc1.bias"]));
    o = dense(o, p[hp + "fc2.weight"], p[hp + "fc2.bias"]);
    parts.push_back(ad::reshape(o, {frames, 4, width}));
  }
  const auto all = ad::permute(ad::concat(parts, 2), {1, 0, 2});  // [4, T, F]
  return {ad::slice(all, 0, 0, 2), ad::slice(all, 0, 2, 2)};
}

ad::Tensor SpeechProcessor::apply_mask(const ad::Tensor& spec, const HeadOutput& out) {
  const auto xr = ad::slice(spec, 0, 0, 1), xi = ad::slice(spec, 0, 1, 1);
  const auto mr = ad::slice(out.mask, 0, 0, 1), mi = ad::slice(out.mask, 0, 1, 1);
  const auto rr = ad::slice(out.residual, 0, 0, 1), ri = ad::slice(out.residual, 0, 1, 1);
  const auto yr = ad::add(ad::sub(ad::mul(mr, xr), ad::mul(mi, xi)), rr);
  const auto yi = ad::add(ad::add(ad::mul(mr, xi), ad::mul(mi, xr)), ri);
  return ad::concat({yr, yi}, 0);
}

ProcessorOutputs SpeechProcessor::forward(const ad::BoundParams& p, const ad::Tensor& x,
                                          const std::optional<Audiogram>& a) const {
  if (x.rank() != 1) throw std::invalid_argument("processor: expected a [S] signal, got " + ad::shape_str(x.shape()));
  if (cfg_.audiogram_conditioning && !a) throw std::invalid_argument("processor: this model needs an audiogram");
  if (!cfg_.audiogram_conditioning && a) throw std::invalid_argument("processor: this model takes no audiogram");
  const int length = x.dim(0);
  if (length < cfg_.stft.frame_len) throw std::invalid_argument("processor: input too short");
  // One hop of zeros on each side, so every output sample is covered by two
  // frames and the overlap-add never divides by a vanishing window sum.
  const int pad = cfg_.stft.frame_len - cfg_.stft.hop;
  auto& tape = x.tape();
  const auto padded = ad::concat({tape.zeros({pad}), x, tape.zeros({pad})}, 0);
  const auto spec = ad::stft(padded, cfg_.stft);
  auto h = band_split(p, spec);
  std::optional<ad::Tensor> e;
  if (a) e = audiogram_embed(p, x.tape(), *a);
  for (int l = 0; l < cfg_.layers; ++l) {
    if (e) h = film(p, l, h, *e);
    h = dual_path_layer(p, l, h);
  }
  ProcessorOutputs out;
  for (Head head : cfg_.heads) {
    const auto y = ad::istft(apply_mask(spec, mask_estimate(p, head, h)), cfg_.stft, length + 2 * pad);
    (head == Head::NR ? out.nr : out.hlc) = ad::slice(y, 0, pad, length);
  }
  return out;
}

SpeechProcessor::Signals SpeechProcessor::process(const ad::ParamSet& params, const AudioSignal& x,
                                                  const std::optional<Audiogram>& a) const {
  x.validate();
  ad::Tape tape;
  const ad::BoundParams p(tape, params, false);
  const auto in = tape.constant({static_cast<int>(x.size())}, x.samples);
  const auto out = forward(p, in, a);
  Signals s;
  auto to_signal = [](const ad::Tensor& t) { return AudioSignal(std::vector<double>(t.values().begin(), t.values().end())); };
  if (out.nr) s.nr = to_signal(*out.nr);
  if (out.hlc) s.hlc = to_signal(*out.hlc);
  return s;
}

}  // namespace jnrhlc
