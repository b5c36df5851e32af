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

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "jnrhlc/ad/archive.hpp"
#include "jnrhlc/ad/gradcheck.hpp"
#include "jnrhlc/ad/ops.hpp"
#include "jnrhlc/objectives.hpp"
#include "jnrhlc/processor.hpp"
#include "jnrhlc/random.hpp"

namespace jnrhlc {
namespace {

ProcessorConfig tiny(std::vector<Head> heads = {Head::NR}, bool cond = false) {
  ProcessorConfig c;
  c.bands.edges_hz = {0.0, 1000.0, 4000.0, 8000.0};
  c.channels = 4;
  c.layers = 1;
  c.heads = std::move(heads);
  c.audiogram_conditioning = cond;
  return c;
}

std::vector<double> noise(std::uint64_t seed, int n, double scale = 0.1) {
  PortableRng rng(seed);
  std::vector<double> x(static_cast<std::size_t>(n));
  for (double& v : x) v = scale * rng.normal();
  return x;
}

TEST(BandSplit, StandardHas27BandsCoveringAllBins) {
  const auto spec = BandSplitSpec::standard();
  EXPECT_EQ(spec.bands(), 27);
  const auto ranges = spec.bin_ranges();
  ASSERT_EQ(ranges.size(), 27u);
  int next = 0;
  for (const auto& [first, count] : ranges) {
    EXPECT_EQ(first, next);
    EXPECT_GT(count, 0);
    next = first + count;
  }
  EXPECT_EQ(next, 257);
}

TEST(BandSplit, BinsFollowBandEdges) {
  const auto spec = BandSplitSpec::standard();
  const auto ranges = spec.bin_ranges();
  for (int k = 0; k < spec.bands(); ++k) {
    const double lo = spec.edges_hz[static_cast<std::size_t>(k)];
    const double hi = spec.edges_hz[static_cast<std::size_t>(k) + 1];
    for (int j = ranges[static_cast<std::size_t>(k)].first;
         j < ranges[static_cast<std::size_t>(k)].first + ranges[static_cast<std::size_t>(k)].second; ++j) {
      const double f = j * 31.25;
      EXPECT_GE(f, lo);
      if (j != 256) {
        EXPECT_LT(f, hi);
      }
    }
  }
  // 200 Hz bands at 31.25 Hz spacing hold 6 or 7 bins.
  EXPECT_EQ(ranges[0].second, 7);
  EXPECT_EQ(ranges[1].second, 6);
  // The last band is 7-8 kHz plus the Nyquist bin.
  EXPECT_EQ(ranges.back().second, 33);
}

TEST(BandSplit, RejectsBadEdges) {
  EXPECT_THROW((BandSplitSpec{{0.0, 4000.0, 2000.0, 8000.0}}.validate()), std::invalid_argument);
  EXPECT_THROW((BandSplitSpec{{0.0, 7000.0}}.validate()), std::invalid_argument);
  EXPECT_THROW((BandSplitSpec{{0.0, 10.0, 20.0, 8000.0}}.validate()), std::invalid_argument);
  EXPECT_NO_THROW((BandSplitSpec{{0.0, 8000.0}}.validate()));
}

TEST(ProcessorConfig, JsonRoundTrip) {
  for (const auto& cfg : {ProcessorConfig::full({Head::NR, Head::HLC}, true), tiny({Head::HLC}, true), tiny()}) {
    EXPECT_EQ(ProcessorConfig::from_json_text(cfg.to_json_text()), cfg);
  }
  EXPECT_THROW(ProcessorConfig::from_json_text("{"), std::invalid_argument);
}

TEST(ProcessorConfig, Validation) {
  auto c = tiny();
  c.stft.frame_len = 1024;
  c.stft.hop = 512;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = tiny({Head::NR, Head::NR});
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = tiny({});
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = tiny();
  c.channels = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_EQ(parse_head("hlc"), Head::HLC);
  EXPECT_THROW(parse_head("both"), std::invalid_argument);
}

TEST(ProcessorParams, CountMatchesInitialisation) {
  for (const auto& cfg : {tiny(), tiny({Head::NR, Head::HLC}, true), ProcessorConfig::desk({Head::HLC}, true),
                          ProcessorConfig::desk({Head::NR}, false)}) {
    EXPECT_EQ(processor_param_count(cfg), init_processor_params(cfg, 3).scalar_count());
  }
}

TEST(ProcessorParams, FullScaleCount) {
  const auto single = processor_param_count(ProcessorConfig::full({Head::HLC}, true));
  const auto dual = processor_param_count(ProcessorConfig::full({Head::NR, Head::HLC}, true));
  EXPECT_GE(single, 3'700'000u);
  EXPECT_LE(single, 5'200'000u);
  EXPECT_GE(dual, 3'700'000u);
  EXPECT_LE(dual, 5'200'000u);
  EXPECT_GT(dual, single);
}

TEST(ProcessorParams, SeededAndFinite) {
  const auto cfg = tiny({Head::NR, Head::HLC}, true);
  const auto a = init_processor_params(cfg, 11);
  EXPECT_EQ(a, init_processor_params(cfg, 11));
  EXPECT_NE(a.flatten(), init_processor_params(cfg, 12).flatten());
  for (double v : a.flatten()) EXPECT_TRUE(std::isfinite(v));
  std::set<std::string> names(a.names().begin(), a.names().end());
  EXPECT_EQ(names.size(), a.names().size());
  EXPECT_TRUE(a.contains("embed.weight"));
  EXPECT_TRUE(a.contains("head.HLC.band.2.fc2.bias"));
  EXPECT_FALSE(init_processor_params(tiny(), 1).contains("embed.weight"));
}

TEST(ProcessorParams, ArchiveRoundTripIsExact) {
  const auto cfg = tiny({Head::NR, Head::HLC}, true);
  const auto p = init_processor_params(cfg, 5);
  ad::Archive ar;
  ar.put_params("theta.", p);
  const auto back = ad::Archive::deserialize(ar.serialize());
  auto q = init_processor_params(cfg, 99);
  back.get_params("theta.", q);
  EXPECT_EQ(p, q);
}

TEST(SpeechProcessor, OutputLengthAndFiniteness) {
  const auto cfg = tiny({Head::NR, Head::HLC}, true);
  const SpeechProcessor proc(cfg);
  const auto p = init_processor_params(cfg, 1);
  for (int n : {512, 1000, 3200, 4097}) {
    const auto out = proc.process(p, AudioSignal(noise(n, n)), standard_audiogram("N3"));
    ASSERT_TRUE(out.nr && out.hlc);
    EXPECT_EQ(out.nr->size(), static_cast<std::size_t>(n));
    EXPECT_EQ(out.hlc->size(), static_cast<std::size_t>(n));
    for (double v : out.nr->samples) EXPECT_TRUE(std::isfinite(v));
  }
  EXPECT_THROW(proc.process(p, AudioSignal(noise(1, 100)), standard_audiogram("N3")), std::invalid_argument);
}

TEST(SpeechProcessor, AudiogramPresenceIsChecked) {
  const SpeechProcessor cond(tiny({Head::HLC}, true));
  const SpeechProcessor plain(tiny());
  const auto pc = init_processor_params(cond.config(), 1);
  const auto pp = init_processor_params(plain.config(), 1);
  const AudioSignal x(noise(2, 1600));
  EXPECT_THROW(cond.process(pc, x, std::nullopt), std::invalid_argument);
  EXPECT_THROW(plain.process(pp, x, standard_audiogram("N1")), std::invalid_argument);
  EXPECT_NO_THROW(plain.process(pp, x, std::nullopt));
}

TEST(SpeechProcessor, InitialisedNearIdentity) {
  const auto cfg = ProcessorConfig::desk({Head::NR, Head::HLC}, true);
  const SpeechProcessor proc(cfg);
  const auto p = init_processor_params(cfg, 7);
  const AudioSignal x(noise(3, 8000));
  const auto out = proc.process(p, x, standard_audiogram("S2"));
  EXPECT_GT(sdr(x, *out.nr), 15.0);
  EXPECT_GT(sdr(x, *out.hlc), 15.0);
}

TEST(SpeechProcessor, FilmStartsNeutral) {
  const auto cfg = tiny({Head::HLC}, true);
  const SpeechProcessor proc(cfg);
  auto p = init_processor_params(cfg, 4);
  const AudioSignal x(noise(4, 2000));
  const auto a = proc.process(p, x, standard_audiogram("NH"));
  const auto b = proc.process(p, x, standard_audiogram("N7"));
  EXPECT_EQ(a.hlc->samples, b.hlc->samples);
  // Once the projections move, the audiogram changes the output.
  PortableRng rng(9);
  for (const auto& name : p.names())
    if (name.rfind("film.", 0) == 0)
      for (double& v : p.at(name).values) v = 0.1 * rng.normal();
  const auto c = proc.process(p, x, standard_audiogram("NH"));
  const auto d = proc.process(p, x, standard_audiogram("N7"));
  double diff = 0.0;
  for (std::size_t i = 0; i < c.hlc->size(); ++i) diff = std::max(diff, std::abs(c.hlc->samples[i] - d.hlc->samples[i]));
  EXPECT_GT(diff, 1e-6);
}

TEST(SpeechProcessor, CausalUpToOneFrame) {
  // A unidirectional time path means sample n only sees input up to the end
  // of the last frame overlapping n.
  const auto cfg = tiny({Head::NR});
  const SpeechProcessor proc(cfg);
  auto p = init_processor_params(cfg, 2);
  PortableRng rng(5);
  for (const auto& name : p.names())
    for (double& v : p.at(name).values) v += 0.05 * rng.normal();
  auto x = noise(6, 6000);
  const auto before = proc.process(p, AudioSignal(x), std::nullopt);
  const int cut = 3000;
  for (std::size_t i = cut; i < x.size(); ++i) x[i] = -x[i] + 0.3;
  const auto after = proc.process(p, AudioSignal(x), std::nullopt);
  // The input is padded by 256 samples at the front. Padded frame t covers
  // [256 t, 256 t + 512); sample n sits at n + 256 and lies in frames up to
  // floor((n + 256) / 256), whose last original input sample is
  // 256 floor((n + 256) / 256) + 255.
  for (int n = 0; n < cut; ++n) {
    if (((n + 256) / 256) * 256 + 255 >= cut) break;
    EXPECT_EQ(before.nr->samples[static_cast<std::size_t>(n)], after.nr->samples[static_cast<std::size_t>(n)]) << n;
  }
  double diff = 0.0;
  for (std::size_t i = cut; i < x.size(); ++i) diff = std::max(diff, std::abs(before.nr->samples[i] - after.nr->samples[i]));
  EXPECT_GT(diff, 1e-3);
}

TEST(SpeechProcessor, ApplyMaskIsComplexProduct) {
  ad::Tape tape;
  const int t = 2, f = 3;
  auto vals = [](std::uint64_t seed) { return noise(seed, 2 * t * f, 1.0); };
  const auto s = vals(1), m = vals(2), r = vals(3);
  const auto out = SpeechProcessor::apply_mask(tape.constant({2, t, f}, s),
                                               {tape.constant({2, t, f}, m), tape.constant({2, t, f}, r)});
  const auto v = out.values();
  const std::size_t half = static_cast<std::size_t>(t * f);
  for (std::size_t i = 0; i < half; ++i) {
    const std::complex<double> z = std::complex<double>(m[i], m[i + half]) * std::complex<double>(s[i], s[i + half]) +
                                   std::complex<double>(r[i], r[i + half]);
    EXPECT_NEAR(v[i], z.real(), 1e-14);
    EXPECT_NEAR(v[i + half], z.imag(), 1e-14);
  }
}

TEST(SpeechProcessor, GradientWithRespectToInput) {
  const auto cfg = tiny({Head::NR});
  const SpeechProcessor proc(cfg);
  auto p = init_processor_params(cfg, 8);
  PortableRng rng(8);
  for (const auto& name : p.names())
    for (double& v : p.at(name).values) v += 0.1 * rng.normal();
  const auto x = noise(10, 1024);
  const auto report = ad::gradient_check(
      [&](ad::Tape& tape, const ad::Tensor& xin) {
        const ad::BoundParams bp(tape, p, false);
        const auto out = proc.forward(bp, xin, std::nullopt);
        return ad::sum(ad::square(*out.nr));
      },
      {1024}, x);
  EXPECT_LT(report.max_rel_error, 1e-4);
}

TEST(SpeechProcessor, GradientWithRespectToParameters) {
  // Directional derivatives of the parameter gradient against central
  // differences over the flattened parameter vector.
  const auto cfg = tiny({Head::NR, Head::HLC}, true);
  const SpeechProcessor proc(cfg);
  auto p = init_processor_params(cfg, 12);
  PortableRng rng(12);
  for (const auto& name : p.names())
    for (double& v : p.at(name).values) v += 0.1 * rng.normal();
  const auto x = noise(13, 800);
  const auto y = noise(14, 800);
  const auto a = standard_audiogram("N4");
  auto objective = [&](const ad::ParamSet& q, std::vector<double>* grad) {
    ad::Tape tape;
    const ad::BoundParams bp(tape, q, grad != nullptr);
    const auto out = proc.forward(bp, tape.constant({800}, x), a);
    const auto loss = ad::add(ad::sum(ad::square(ad::sub(*out.nr, tape.constant({800}, y)))), ad::sum(ad::square(*out.hlc)));
    if (grad) *grad = bp.flat_gradient(tape.backward(loss));
    return loss.item();
  };
  std::vector<double> g;
  objective(p, &g);
  const auto theta = p.flatten();
  ASSERT_EQ(g.size(), theta.size());
  const double eps = 1e-5;
  for (int k = 0; k < 6; ++k) {
    std::vector<double> d(theta.size());
    double norm = 0.0;
    for (double& v : d) {
      v = rng.normal();
      norm += v * v;
    }
    double analytic = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      d[i] /= std::sqrt(norm);
      analytic += g[i] * d[i];
    }
    auto shifted = [&](double s) {
      auto q = p;
      auto t = theta;
      for (std::size_t i = 0; i < t.size(); ++i) t[i] += s * d[i];
      q.unflatten(t);
      return objective(q, nullptr);
    };
    const double numeric = (shifted(eps) - shifted(-eps)) / (2.0 * eps);
    EXPECT_LT(std::abs(analytic - numeric) / std::max(std::abs(numeric), 1e-8), 1e-4) << analytic << " vs " << numeric;
  }
}

}  // namespace
}  // namespace jnrhlc
