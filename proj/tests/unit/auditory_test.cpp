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
#include <complex>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <thread>
#include <vector>

#include <gtest/gtest.h>

#include "jnrhlc/ad/gradcheck.hpp"
#include "jnrhlc/ad/ops.hpp"
#include "jnrhlc/auditory_model.hpp"
#include "jnrhlc/random.hpp"

namespace jnrhlc {
namespace {

constexpr double kPi = std::numbers::pi;

const AuditoryModel& model() { return *AuditoryModel::standard(); }

std::vector<double> to_vec(const ad::Tensor& t) { return {t.values().begin(), t.values().end()}; }

ad::Tensor on_tape(ad::Tape& tape, const std::vector<double>& x) {
  return tape.constant({static_cast<int>(x.size())}, x);
}

double dft_mag(std::span<const double> x, double f) {
  double re = 0.0, im = 0.0;
  for (std::size_t n = 0; n < x.size(); ++n) {
    re += x[n] * std::cos(2.0 * kPi * f * n / kSampleRate);
    im -= x[n] * std::sin(2.0 * kPi * f * n / kSampleRate);
  }
  return std::hypot(re, im);
}

// RMS of one channel over the second half of the signal.
double steady_rms_db(const std::vector<double>& rows, int channel, int n) {
  double e = 0.0;
  for (int i = n / 2; i < n; ++i) {
    const double v = rows[static_cast<std::size_t>(channel) * n + i];
    e += v * v;
  }
  return 10.0 * std::log10(e / (n - n / 2));
}

int nearest_channel(double hz) {
  const auto& cf = model().center_frequencies();
  int best = 0;
  for (int i = 0; i < static_cast<int>(cf.size()); ++i)
    if (std::abs(cf[i] - hz) < std::abs(cf[best] - hz)) best = i;
  return best;
}

// Vowel-like harmonic complex at 65 dB SPL with a falling spectral envelope.
AudioSignal speech_like(double seconds, std::uint64_t seed) {
  PortableRng rng(seed);
  const int n = static_cast<int>(seconds * kSampleRate);
  std::vector<double> s(static_cast<std::size_t>(n), 0.0);
  const double f0 = 120.0;
  for (int h = 1; f0 * h < 7000.0; ++h) {
    const double amp = 1.0 / h;
    const double phase = rng.uniform(0.0, 2.0 * kPi);
    for (int i = 0; i < n; ++i) s[static_cast<std::size_t>(i)] += amp * std::sin(2.0 * kPi * f0 * h * i / kSampleRate + phase);
  }
  double e = 0.0;
  for (double v : s) e += v * v;
  const double g = db_spl_to_rms(65.0) / std::sqrt(e / n);
  for (double& v : s) v *= g;
  return AudioSignal(std::move(s));
}

// ---------------------------------------------------------------- audiogram

TEST(Audiogram, InterpolationExamples) {
  Audiogram zero;
  for (double v : interpolate_audiogram(zero, auditory_center_frequencies())) EXPECT_EQ(v, 0.0);

  Audiogram a;
  a.thresholds = {10, 15, 20, 25, 30, 35, 40, 50, 60, 70};
  const double q[] = {1000.0, 80.0, 7643.0, 250.0, 6000.0};
  const auto hl = interpolate_audiogram(a, q);
  EXPECT_EQ(hl[0], 30.0);
  EXPECT_EQ(hl[1], 10.0);
  EXPECT_EQ(hl[2], 70.0);
  EXPECT_EQ(hl[3], 10.0);
  EXPECT_EQ(hl[4], 70.0);
}

TEST(Audiogram, InterpolationIsLinearInLogFrequency) {
  Audiogram a;
  a.thresholds = {0, 0, 0, 0, 20, 50, 50, 50, 50, 50};
  // Geometric midpoint of 1000 and 1500 Hz sits halfway between 20 and 50.
  const double q[] = {std::sqrt(1000.0 * 1500.0)};
  EXPECT_NEAR(interpolate_audiogram(a, q)[0], 35.0, 1e-12);
}

TEST(Audiogram, Validation) {
  Audiogram a;
  a.thresholds[3] = -1.0;
  EXPECT_THROW(a.validate(), std::invalid_argument);
  a.thresholds[3] = 105.5;
  EXPECT_THROW(a.validate(), std::invalid_argument);
  a.thresholds[3] = 105.0;
  EXPECT_NO_THROW(a.validate());
  a.thresholds[3] = std::nan("");
  EXPECT_THROW(a.validate(), std::invalid_argument);
}

TEST(Audiogram, JsonRoundTripAndFrequencyCheck) {
  Audiogram a;
  a.thresholds = {5, 10, 15.5, 20, 25, 30, 35, 40, 45, 50};
  EXPECT_EQ(Audiogram::from_json_text(a.to_json_text()), a);
  EXPECT_THROW(Audiogram::from_json_text(R"({"frequencies_hz":[250,500],"thresholds_db_hl":[1,2]})"),
               std::invalid_argument);
  EXPECT_THROW(Audiogram::from_json_text(
                   R"({"frequencies_hz":[250,375,500,750,1000,1500,2000,3000,4000,8000],)"
                   R"("thresholds_db_hl":[0,0,0,0,0,0,0,0,0,0]})"),
               std::invalid_argument);
  EXPECT_THROW(Audiogram::from_json_text("not json"), std::invalid_argument);
}

TEST(Audiogram, ParseList) {
  const auto a = Audiogram::parse_list("0,5,10,15,20,25,30,35,40,45");
  EXPECT_EQ(a.thresholds[9], 45.0);
  EXPECT_THROW(Audiogram::parse_list("0,5,10"), std::invalid_argument);
  EXPECT_THROW(Audiogram::parse_list("0,5,10,15,20,25,30,35,40,200"), std::invalid_argument);
}

TEST(Audiogram, StandardSetIsBundled) {
  const auto& all = standard_audiograms();
  ASSERT_EQ(all.size(), 11u);
  EXPECT_EQ(all.front().name, "NH");
  EXPECT_TRUE(all.front().audiogram.is_normal());
  for (const auto& na : all) EXPECT_NO_THROW(na.audiogram.validate());
  EXPECT_THROW(standard_audiogram("N9"), std::invalid_argument);
  // The N series is ordered by severity.
  const auto& n1 = standard_audiogram("N1").thresholds;
  const auto& n7 = standard_audiogram("N7").thresholds;
  for (std::size_t i = 0; i < n1.size(); ++i) EXPECT_LE(n1[i], n7[i]);
}

TEST(HearingLoss, SplitExamples) {
  const double tot[] = {60.0, 90.0, 0.0};
  const double max[] = {50.0, 50.0, 50.0};
  const auto p = split_hearing_loss(tot, max);
  EXPECT_DOUBLE_EQ(p.hl_ohc[0], 40.0);
  EXPECT_DOUBLE_EQ(p.hl_ihc[0], 20.0);
  EXPECT_DOUBLE_EQ(p.hl_ohc[1], 50.0);
  EXPECT_DOUBLE_EQ(p.hl_ihc[1], 40.0);
  EXPECT_EQ(p.hl_ohc[2], 0.0);
  EXPECT_EQ(p.hl_ihc[2], 0.0);
  const double neg[] = {-1.0, 0.0, 0.0};
  EXPECT_THROW(split_hearing_loss(neg, max), std::invalid_argument);
}

TEST(HearingLoss, OhcClampHoldsForEveryStandardAudiogram) {
  for (const auto& na : standard_audiograms()) {
    const auto p = model().hearing_loss(na.audiogram);
    for (std::size_t c = 0; c < p.hl_ohc.size(); ++c) {
      EXPECT_LE(p.hl_ohc[c], p.hl_ohc_max[c]) << na.name;
      EXPECT_GE(p.hl_ihc[c], 0.0) << na.name;
      EXPECT_NEAR(p.hl_ohc[c] + p.hl_ihc[c], p.hl_total[c], 1e-12);
    }
  }
}

// ---------------------------------------------------------------- DRNL table

TEST(DrnlParams, LiteratureTableIsValidAndCompressive) {
  const auto p = DrnlParams::literature(auditory_center_frequencies());
  ASSERT_EQ(p.channels.size(), 31u);
  for (const auto& ch : p.channels) {
    EXPECT_GT(ch.c, 0.0);
    EXPECT_LT(ch.c, 1.0);
    EXPECT_GT(ch.lin_gain, 0.0);
    EXPECT_GT(ch.a, 0.0);
    EXPECT_GT(ch.b, 0.0);
  }
  // Spot value: 10^(1.40298 + 0.81916 log10(1000))
  const auto one_k = DrnlParams::literature(std::vector<double>{1000.0});
  EXPECT_NEAR(one_k.channels[0].a, std::pow(10.0, 1.40298 + 0.81916 * 3.0), 1e-9);
}

TEST(DrnlParams, CsvRoundTripIsExact) {
  const auto p = DrnlParams::literature(auditory_center_frequencies());
  EXPECT_EQ(DrnlParams::parse_csv(p.to_csv()), p);
}

TEST(DrnlParams, BundledTableMatchesLiteratureFits) {
  const auto path = std::filesystem::path(JNRHLC_DATA_DIR) / "drnl_channels.csv";
  EXPECT_EQ(DrnlParams::load_csv(path), DrnlParams::literature(auditory_center_frequencies()));
}

TEST(DrnlParams, RejectsBadTables) {
  auto p = DrnlParams::literature(std::vector<double>{1000.0});
  p.channels[0].c = 1.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.channels[0].c = 0.25;
  p.channels[0].b = 0.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  EXPECT_THROW(DrnlParams::parse_csv("bf,lin_fc\n1000,abc\n"), std::invalid_argument);
}

// ---------------------------------------------------------------- model layout

TEST(AuditoryModel, ChannelsAndCenters) {
  EXPECT_EQ(model().channels(), 31);
  // Independent ERB-rate spacing: 21.4 log10(1 + 0.00437 f).
  const double e0 = 21.4 * std::log10(1.0 + 0.00437 * 80.0);
  const double e1 = 21.4 * std::log10(1.0 + 0.00437 * 7643.0);
  for (int i = 0; i < 31; ++i) {
    const double e = e0 + (e1 - e0) * i / 30.0;
    const double f = (std::pow(10.0, e / 21.4) - 1.0) / 0.00437;
    EXPECT_NEAR(model().center_frequencies()[i], f, 0.01);
  }
  // One ERB-rate unit apart, as the channel count implies.
  EXPECT_NEAR((e1 - e0) / 30.0, 1.0, 0.01);
}

// ---------------------------------------------------------------- middle ear

TEST(MiddleEar, BypassIsIdentity) {
  AuditoryModelOptions opt;
  opt.middle_ear = false;
  const AuditoryModel bypass(DrnlParams::literature(auditory_center_frequencies()), opt);
  ad::Tape tape;
  const auto x = speech_like(0.05, 3).samples;
  EXPECT_EQ(to_vec(bypass.middle_ear(on_tape(tape, x))), x);
}

TEST(MiddleEar, Linear) {
  ad::Tape tape;
  const auto x = speech_like(0.05, 4).samples;
  const auto y = speech_like(0.05, 5).samples;
  std::vector<double> mix(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) mix[i] = 2.0 * x[i] - 0.5 * y[i];
  const auto fx = to_vec(model().middle_ear(on_tape(tape, x)));
  const auto fy = to_vec(model().middle_ear(on_tape(tape, y)));
  const auto fm = to_vec(model().middle_ear(on_tape(tape, mix)));
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(fm[i], 2.0 * fx[i] - 0.5 * fy[i], 1e-15);
}

TEST(MiddleEar, PassbandPeakBetween500And2000Hz) {
  const auto h = middle_ear_taps();
  ASSERT_EQ(h.size(), 512u);
  double best_f = 0.0, best = 0.0;
  for (double f = 20.0; f < 8000.0; f += 5.0) {
    const double m = dft_mag(h, f);
    if (m > best) best = m, best_f = f;
  }
  EXPECT_GE(best_f, 500.0);
  EXPECT_LE(best_f, 2000.0);
  // Bandpass: at least 10 dB down at both ends.
  EXPECT_LT(20.0 * std::log10(dft_mag(h, 100.0) / best), -10.0);
  EXPECT_LT(20.0 * std::log10(dft_mag(h, 7000.0) / best), -10.0);
  // Linear phase.
  for (std::size_t i = 0; i < h.size(); ++i) EXPECT_NEAR(h[i], h[h.size() - 1 - i], 1e-15);
}

// ---------------------------------------------------------------- broken stick

TEST(BrokenStick, Branches) {
  ad::Tape tape;
  const double a[] = {100.0}, b[] = {2.0}, c[] = {0.25};
  const double g = 0.5;
  const double ga[] = {g * a[0]};
  const double knee = std::pow(b[0] / ga[0], 1.0 / (1.0 - c[0]));
  const auto x = tape.constant({1, 4}, {0.0, 1e-3 * knee, -1e-3 * knee, 10.0 * knee});
  const auto y = to_vec(ad::broken_stick(x, ga, b, c));
  EXPECT_EQ(y[0], 0.0);
  EXPECT_DOUBLE_EQ(y[1], g * a[0] * 1e-3 * knee);
  EXPECT_DOUBLE_EQ(y[2], -g * a[0] * 1e-3 * knee);
  EXPECT_DOUBLE_EQ(y[3], b[0] * std::pow(10.0 * knee, c[0]));
  // Both branches agree at the analytic knee.
  EXPECT_NEAR(ga[0] * knee, b[0] * std::pow(knee, c[0]), 1e-9 * ga[0] * knee);
  const auto near = tape.constant({1, 2}, {knee * (1.0 - 1e-12), knee * (1.0 + 1e-12)});
  const auto yn = to_vec(ad::broken_stick(near, ga, b, c));
  EXPECT_NEAR(yn[0], yn[1], 1e-9 * std::abs(yn[0]));
}

// ---------------------------------------------------------------- OHC loss

TEST(OhcMax, IdenticalPathsGiveSixDb) {
  auto p = DrnlParams::literature(std::vector<double>{1000.0});
  auto& ch = p.channels[0];
  // Both paths reduce to gain * GT^4 * LP at low level.
  ch.lin_fc = ch.nlin_fc;
  ch.lin_bw = ch.nlin_bw;
  ch.lin_lp = ch.nlin_lp;
  ch.lin_ngt = 4;
  ch.lin_nlp = 1;
  ch.lin_gain = ch.a;
  EXPECT_NEAR(compute_ohc_max(p)[0], 20.0 * std::log10(2.0), 1e-9);
}

TEST(OhcMax, GrowsWithNonlinearGain) {
  auto p = DrnlParams::literature(std::vector<double>{500.0, 1000.0, 4000.0});
  const auto base = compute_ohc_max(p);
  for (auto& ch : p.channels) ch.a *= 2.0;
  const auto more = compute_ohc_max(p);
  for (std::size_t i = 0; i < base.size(); ++i) EXPECT_GT(more[i], base[i]);
}

TEST(OhcMax, NonNegative) {
  for (double v : model().ohc_max()) EXPECT_GE(v, 0.0);
}

// Time-domain probe: steady-state level of a 10 dB SPL tone at BF through
// the full filterbank against the linear path alone.
TEST(OhcMax, MatchesTimeDomainProbe) {
  for (int ch : {3, 13, 22, 29}) {
    const double bf = model().center_frequencies()[ch];
    const auto tone = pure_tone(bf, 10.0, 0.4);
    ad::Tape tape;
    const auto x = on_tape(tape, tone.samples);
    const std::vector<double> unity(31, 1.0);
    const int n = static_cast<int>(tone.size());
    const double full = steady_rms_db(to_vec(model().filterbank(x, unity)), ch, n);
    const double lin = steady_rms_db(to_vec(model().linear_path(x)), ch, n);
    EXPECT_NEAR(full - lin, model().ohc_max()[ch], 0.1) << "channel " << ch;
  }
}

TEST(OhcGain, ZeroLossIsUnity) {
  const std::vector<double> zero(31, 0.0);
  for (double g : model().ohc_gains(zero)) EXPECT_EQ(g, 1.0);
}

TEST(OhcGain, DecreasesWithLoss) {
  std::vector<double> prev(31, 1.0);
  for (double hl = 5.0; hl <= 30.0; hl += 5.0) {
    const std::vector<double> loss(31, hl);
    const auto g = model().ohc_gains(loss);
    for (int c = 0; c < 31; ++c) {
      if (hl > model().ohc_max()[c]) continue;
      EXPECT_LT(g[c], prev[c]);
      EXPECT_GT(g[c], 0.0);
    }
    prev = g;
  }
}

TEST(OhcGain, FullLossLeavesLinearPathForLowLevelProbe) {
  for (int ch : {5, 13, 25}) {
    const double bf = model().center_frequencies()[ch];
    const auto tone = pure_tone(bf, 10.0, 0.4);
    ad::Tape tape;
    const auto x = on_tape(tape, tone.samples);
    const auto gains = model().ohc_gains(model().ohc_max());
    const int n = static_cast<int>(tone.size());
    const double hi = steady_rms_db(to_vec(model().filterbank(x, gains)), ch, n);
    const double lin = steady_rms_db(to_vec(model().linear_path(x)), ch, n);
    EXPECT_NEAR(hi, lin, 0.5) << "channel " << ch;
  }
}

TEST(OhcGain, PartialLossLowersProbeByTheLoss) {
  const int ch = 13;
  const double bf = model().center_frequencies()[ch];
  const auto tone = pure_tone(bf, 10.0, 0.4);
  ad::Tape tape;
  const auto x = on_tape(tape, tone.samples);
  const int n = static_cast<int>(tone.size());
  const std::vector<double> unity(31, 1.0);
  const std::vector<double> loss(31, 20.0);
  const double nh = steady_rms_db(to_vec(model().filterbank(x, unity)), ch, n);
  const double hi = steady_rms_db(to_vec(model().filterbank(x, model().ohc_gains(loss))), ch, n);
  EXPECT_NEAR(nh - hi, 20.0, 0.2);
}

TEST(Drnl, LevelGrowth) {
  const int ch = nearest_channel(1000.0);
  const double bf = model().center_frequencies()[ch];
  const std::vector<double> unity(31, 1.0);
  auto level = [&](double db) {
    const auto tone = pure_tone(bf, db, 0.3);
    ad::Tape tape;
    return steady_rms_db(to_vec(model().filterbank(on_tape(tape, tone.samples), unity)), ch,
                         static_cast<int>(tone.size()));
  };
  // Below the knee: linear growth.
  EXPECT_NEAR((level(10.0) - level(0.0)) / 10.0, 1.0, 0.02);
  // Mid levels: the nonlinear path dominates and grows at c dB/dB.
  const double c = model().params().channels[ch].c;
  EXPECT_NEAR((level(60.0) - level(50.0)) / 10.0, c, 0.1);
}

TEST(Drnl, TimeShiftCovariance) {
  const auto x = speech_like(0.1, 8).samples;
  const int k = 37;
  std::vector<double> shifted(x.size(), 0.0);
  std::copy(x.begin(), x.end() - k, shifted.begin() + k);
  ad::Tape tape;
  const std::vector<double> unity(31, 1.0);
  const auto y0 = to_vec(model().ihc_transduction(model().filterbank(on_tape(tape, x), unity)));
  const auto y1 = to_vec(model().ihc_transduction(model().filterbank(on_tape(tape, shifted), unity)));
  const int n = static_cast<int>(x.size());
  double scale = 0.0;
  for (double v : y0) scale = std::max(scale, std::abs(v));
  for (int c = 0; c < 31; ++c)
    for (int i = 0; i + k < n; ++i)
      ASSERT_NEAR(y1[static_cast<std::size_t>(c) * n + i + k], y0[static_cast<std::size_t>(c) * n + i], 1e-9 * scale);
}

// ---------------------------------------------------------------- IHC

TEST(Ihc, ConstantInputPassesAtUnitGain) {
  ad::Tape tape;
  const auto x = tape.constant({2, 100}, std::vector<double>(200, 0.7));
  const auto y = to_vec(model().ihc_transduction(x));
  const int settle = static_cast<int>(ihc_lowpass_taps().size()) - 1;
  for (int c = 0; c < 2; ++c)
    for (int i = settle; i < 100; ++i) EXPECT_NEAR(y[c * 100 + i], 0.7, 1e-12);
}

TEST(Ihc, RectifiesBeforeFiltering) {
  ad::Tape tape;
  std::vector<double> x(40, 0.0);
  x[0] = -1.0, x[1] = 2.0, x[2] = -3.0;
  const auto y = to_vec(model().ihc_transduction(tape.constant({1, 40}, x)));
  const auto h = ihc_lowpass_taps();
  // Only the rectified 2 survives, so the output is 2 h delayed by one.
  EXPECT_EQ(y[0], 0.0);
  for (std::size_t i = 0; i < h.size(); ++i) EXPECT_NEAR(y[i + 1], 2.0 * h[i], 1e-15);
}

TEST(Ihc, FilterIsNonNegativeWithHalfGainAtOneKilohertz) {
  const auto h = ihc_lowpass_taps();
  double sum = 0.0;
  for (double v : h) {
    EXPECT_GE(v, 0.0);
    sum += v;
  }
  EXPECT_NEAR(sum, 1.0, 1e-14);
  EXPECT_NEAR(20.0 * std::log10(dft_mag(h, 1000.0)), -6.02, 0.05);
}

TEST(Ihc, HighToneFineStructureIsRemoved) {
  auto carrier_db = [](double f) {
    const int n = 4000;
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) x[i] = std::sin(2.0 * kPi * f * i / kSampleRate);
    ad::Tape tape;
    const auto y = to_vec(model().ihc_transduction(tape.constant({1, n}, x)));
    return 20.0 * std::log10(dft_mag(std::span<const double>(y).subspan(1000), f));
  };
  EXPECT_GT(carrier_db(200.0) - carrier_db(3000.0), 20.0);
}

// ---------------------------------------------------------------- compression

TEST(Compression, ZeroMapsToZeroAndNegativeThrows) {
  ad::Tape tape;
  const std::vector<double> hl(2, 0.0);
  const auto y = to_vec(model().log_compression(tape.constant({2, 3}, std::vector<double>(6, 0.0)), hl));
  for (double v : y) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(model().log_compression(tape.constant({2, 1}, {0.1, -1e-30}), hl), std::invalid_argument);
}

TEST(Compression, MonotoneInInputAndInIhcLoss) {
  ad::Tape tape;
  std::vector<double> x;
  for (double v = 1e-8; v < 1.0; v *= 3.0) x.push_back(v);
  const int n = static_cast<int>(x.size());
  std::vector<double> prev;
  for (double hl : {0.0, 10.0, 20.0, 40.0}) {
    const std::vector<double> loss(1, hl);
    const auto y = to_vec(model().log_compression(tape.constant({1, n}, x), loss));
    for (int i = 1; i < n; ++i) EXPECT_GT(y[i], y[i - 1]);
    if (!prev.empty()) {
      for (int i = 0; i < n; ++i) EXPECT_LT(y[i], prev[i]);
    }
    prev = y;
  }
}

TEST(Compression, FormulaWithIhcGain) {
  ad::Tape tape;
  const std::vector<double> loss = {12.0};
  const auto y = model().log_compression(tape.constant({1, 1}, {3e-4}), loss).item();
  const auto k = kDefaultCompression;
  EXPECT_NEAR(y, k.gain * std::log(1.0 + std::pow(10.0, -0.6) * 3e-4 / k.threshold), 1e-12);
}

TEST(AdaptationLoops, SteadyStateIsThirtySecondRoot) {
  const double floor32 = std::pow(1e-5, 1.0 / 32.0);
  for (double in : {1e-4, 1e-2, 0.3, 10.0}) {
    const double expect = 100.0 * (std::pow(in, 1.0 / 32.0) - floor32) / (1.0 - floor32);
    EXPECT_NEAR(adaptation_loops_steady_state(in), expect, 1e-6 * expect);
  }
  EXPECT_NEAR(adaptation_loops_steady_state(1e-5), 0.0, 1e-9);
  EXPECT_NEAR(adaptation_loops_steady_state(0.0), 0.0, 1e-9);
}

TEST(Compression, CommittedConstantsMatchCalibration) {
  const auto cal = calibrate_compression(model());
  EXPECT_EQ(cal.channel, nearest_channel(1000.0));
  EXPECT_NEAR(cal.constants.gain, kDefaultCompression.gain, 1e-9 * kDefaultCompression.gain);
  EXPECT_NEAR(cal.constants.threshold, kDefaultCompression.threshold, 1e-9 * kDefaultCompression.threshold);
}

// The full model's steady output for a 100 dB SPL 1 kHz tone against the
// adaptation loops driven by the same mean IHC drive.
TEST(Compression, HighLevelSteadyOutputMatchesAdaptationLoops) {
  const auto cal = calibrate_compression(model());
  const auto tone = pure_tone(1000.0, 100.0, 0.5);
  const auto y = model().run(tone, std::nullopt);
  const int n = static_cast<int>(tone.size());
  double mean = 0.0;
  for (int i = n * 2 / 5; i < n; ++i) mean += y[static_cast<std::size_t>(cal.channel) * n + i];
  mean /= n - n * 2 / 5;
  EXPECT_NEAR(mean, cal.target_high, 0.01 * cal.target_high);
}

// ---------------------------------------------------------------- full model

TEST(RunModel, NormalHearingEquivalenceIsExact) {
  const auto x = speech_like(0.2, 11);
  Audiogram zero;
  EXPECT_EQ(model().run(x, std::nullopt), model().run(x, zero));
}

TEST(RunModel, SilenceGivesZeros) {
  const AudioSignal silence(std::vector<double>(800, 0.0));
  for (double v : model().run(silence, std::nullopt)) EXPECT_EQ(v, 0.0);
}

TEST(RunModel, ShapeAndFiniteness) {
  const auto x = speech_like(0.1, 12);
  const auto y = model().run(x, standard_audiogram("S3"));
  ASSERT_EQ(y.size(), 31u * x.size());
  for (double v : y) ASSERT_TRUE(std::isfinite(v));
}

TEST(RunModel, FlatLossLowersRepresentationEnergy) {
  const auto x = speech_like(0.3, 13);
  Audiogram flat;
  flat.thresholds.fill(60.0);
  auto energy = [](const std::vector<double>& v) {
    double e = 0.0;
    for (double s : v) e += s * s;
    return e;
  };
  EXPECT_LT(energy(model().run(x, flat)), energy(model().run(x, std::nullopt)));
}

TEST(RunModel, PlainRunLeavesNoTapeRecords) {
  ad::Tape tape;
  const auto x = speech_like(0.05, 14).samples;
  model().run(on_tape(tape, x), std::nullopt);
  EXPECT_EQ(tape.num_records(), 0u);
}

TEST(RunModel, ConcurrentRunsAgree) {
  const auto x = speech_like(0.1, 15);
  const auto ref = model().run(x, standard_audiogram("N3"));
  std::vector<double> other;
  std::thread t([&] { other = model().run(x, standard_audiogram("N3")); });
  const auto again = model().run(x, standard_audiogram("N3"));
  t.join();
  EXPECT_EQ(other, ref);
  EXPECT_EQ(again, ref);
}

TEST(RunModel, MaeGradientMatchesFiniteDifferences) {
  const auto x = speech_like(0.2, 16).samples;
  const auto y = speech_like(0.2, 17).samples;
  const auto& hi = standard_audiogram("N4");
  auto loss = [&](ad::Tape& tape, const ad::Tensor& in) {
    const auto ref = model().run(on_tape(tape, y), std::nullopt);
    return ad::mean(ad::abs(ad::sub(model().run(in, hi), ref)));
  };
  const auto report = ad::gradient_check(loss, {static_cast<int>(x.size())}, x);
  EXPECT_GT(report.checked, 0u);
  EXPECT_LT(report.max_rel_error, 1e-3) << "analytic " << report.worst_analytic << " numeric " << report.worst_numeric;
}

}  // namespace
}  // namespace jnrhlc
