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

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "jnrhlc/manifest.hpp"
#include "jnrhlc/random.hpp"
#include "jnrhlc/trainer.hpp"
#include "jnrhlc/wav.hpp"

namespace jnrhlc {
namespace {

namespace fs = std::filesystem;

ProcessorConfig tiny_processor() {
  ProcessorConfig c;
  c.bands.edges_hz = {0.0, 1000.0, 4000.0, 8000.0};
  c.channels = 4;
  c.layers = 1;
  return c;
}

const Corpus& corpus() {
  static const Corpus c = Corpus::synthetic(21, 4, 4, 1.0);
  return c;
}

std::vector<Scene> batch(int n, std::uint64_t first = 0, double seconds = 0.1) {
  SceneConfig sc;
  sc.scene_seconds = seconds;
  sc.seed = 8;
  return scene_batch(sc, corpus(), synthetic_rir_provider(), AudiogramSampler{}, first, n);
}

TrainConfig train_config(TrainMode mode, LossKind loss = LossKind::MAE) {
  TrainConfig c;
  c.mode = mode;
  c.loss = loss;
  c.batch_size = 2;
  c.seed = 4;
  return c;
}

fs::path temp_dir(const std::string& name) {
  auto d = fs::temp_directory_path() / ("jnrhlc_trainer_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

TEST(Schedule, LearningRate) {
  TrainConfig c;
  EXPECT_EQ(lr_at(c, 0), 1e-3);
  EXPECT_EQ(lr_at(c, 9999), 1e-3);
  EXPECT_NEAR(lr_at(c, 10000), 9.9e-4, 1e-18);
  EXPECT_NEAR(lr_at(c, 19999), 9.9e-4, 1e-18);
  EXPECT_NEAR(lr_at(c, 2'000'000), 1e-3 * std::pow(0.99, 200), 1e-18);
  EXPECT_NEAR(lr_at(c, 2'000'000), 1.34e-4, 1e-6);
}

TEST(Clip, ClosedFormCases) {
  std::vector<double> a = {1.2, -1.6};  // norm 2
  EXPECT_DOUBLE_EQ(clip_gradients(a, 5.0), 2.0);
  EXPECT_EQ(a, (std::vector<double>{1.2, -1.6}));
  std::vector<double> b = {6.0, 8.0};  // norm 10
  EXPECT_DOUBLE_EQ(clip_gradients(b, 5.0), 10.0);
  EXPECT_NEAR(b[0], 3.0, 1e-12);
  EXPECT_NEAR(b[1], 4.0, 1e-12);
  EXPECT_NEAR(std::hypot(b[0], b[1]), 5.0, 1e-9);
  std::vector<double> z(7, 0.0);
  EXPECT_EQ(clip_gradients(z, 5.0), 0.0);
  EXPECT_EQ(z, std::vector<double>(7, 0.0));
}

TEST(Clip, NormNeverExceedsBound) {
  PortableRng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> g(1 + rng.below(300));
    const double scale = std::pow(10.0, rng.uniform(-3.0, 4.0));
    for (double& v : g) v = scale * rng.normal();
    clip_gradients(g, 5.0);
    double sq = 0.0;
    for (double v : g) sq += v * v;
    EXPECT_LE(std::sqrt(sq), 5.0 + 1e-9);
  }
}

TEST(Adam, ZeroGradientLeavesParameters) {
  AdamState s(3);
  std::vector<double> p = {1.0, -2.0, 3.0};
  s.update(p, std::vector<double>(3, 0.0), 0.1);
  EXPECT_EQ(p, (std::vector<double>{1.0, -2.0, 3.0}));
  EXPECT_EQ(s.step(), 1u);
}

TEST(Adam, FirstStepIsLearningRate) {
  // m_hat = 1 and v_hat = 1 after bias correction.
  AdamState s(1);
  std::vector<double> p = {0.5};
  s.update(p, std::vector<double>{1.0}, 1e-3);
  EXPECT_NEAR(p[0], 0.5 - 1e-3 / (1.0 + 1e-8), 1e-15);
  s.update(p, std::vector<double>{1.0}, 1e-3);
  EXPECT_NEAR(p[0], 0.5 - 2e-3 / (1.0 + 1e-8), 1e-15);
}

TEST(Adam, QuadraticBowlConverges) {
  PortableRng rng(2);
  std::vector<double> theta(10);
  for (double& v : theta) v = rng.normal();
  AdamState s(theta.size());
  for (int i = 0; i < 500; ++i) s.update(theta, std::vector<double>(theta), 0.1);
  double sq = 0.0;
  for (double v : theta) sq += v * v;
  EXPECT_LT(std::sqrt(sq), 1e-3);
}

TEST(Adam, SplitLearningRates) {
  AdamState s(2);
  std::vector<double> p = {0.0, 0.0};
  s.update(p, std::vector<double>{1.0, 1.0}, 1, 1e-3, 1e-2);
  EXPECT_NEAR(p[0], -1e-3, 1e-10);
  EXPECT_NEAR(p[1], -1e-2, 1e-10);
  EXPECT_THROW(s.update(p, std::vector<double>{1.0}, 1e-3), std::invalid_argument);
}

TEST(Modes, ParsingAndHeads) {
  EXPECT_EQ(parse_mode("C-NR-HLC"), TrainMode::C_NR_HLC);
  EXPECT_EQ(parse_mode("nr_hlc"), TrainMode::NR_HLC);
  EXPECT_THROW(parse_mode("joint"), std::invalid_argument);
  const auto base = tiny_processor();
  EXPECT_EQ(processor_for_mode(TrainMode::SDR, base).heads, std::vector<Head>{Head::NR});
  EXPECT_FALSE(processor_for_mode(TrainMode::NR, base).audiogram_conditioning);
  EXPECT_EQ(processor_for_mode(TrainMode::HLC, base).heads, std::vector<Head>{Head::HLC});
  EXPECT_TRUE(processor_for_mode(TrainMode::NR_HLC, base).audiogram_conditioning);
  EXPECT_EQ(processor_for_mode(TrainMode::C_NR_HLC, base).heads, (std::vector<Head>{Head::NR, Head::HLC}));
}

TEST(TrainConfig, JsonAndValidation) {
  auto c = train_config(TrainMode::HLC, LossKind::MSE);
  c.lr0 = 3e-4;
  EXPECT_EQ(TrainConfig::from_json_text(c.to_json_text()), c);
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = train_config(TrainMode::HLC);
  c.clip_norm = -1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_THROW(TrainConfig::from_json_text(R"({"mode":"nr"})"), std::invalid_argument);
}

TEST(Trainer, ControllableTotalAtZeroIsSum) {
  const Trainer t(train_config(TrainMode::C_NR_HLC), tiny_processor());
  const auto l = t.evaluate(batch(2));
  EXPECT_GT(l.l_nr, 0.0);
  EXPECT_GT(l.l_hlc, 0.0);
  EXPECT_EQ(l.total, l.l_nr + l.l_hlc);
}

TEST(Trainer, UncertaintyGradientIsClosedForm) {
  Trainer t(train_config(TrainMode::C_NR_HLC), tiny_processor());
  t.set_uncertainty(0.3, -0.4);
  std::vector<double> g;
  const auto l = t.evaluate(batch(2), &g);
  const auto n = t.params().scalar_count();
  ASSERT_EQ(g.size(), n + 2);
  EXPECT_NEAR(g[n], 1.0 - l.l_nr * std::exp(-0.3), 1e-12);
  EXPECT_NEAR(g[n + 1], 1.0 - l.l_hlc * std::exp(0.4), 1e-12);
  EXPECT_NEAR(l.total, l.l_nr * std::exp(-0.3) + 0.3 + l.l_hlc * std::exp(0.4) - 0.4, 1e-12);
}

TEST(Trainer, BatchGradientMatchesFiniteDifferences) {
  for (auto mode : {TrainMode::C_NR_HLC, TrainMode::SDR, TrainMode::NR_HLC}) {
    Trainer t(train_config(mode, LossKind::MSE), tiny_processor());
    PortableRng rng(3);
    for (const auto& name : t.params().names())
      for (double& v : t.params().at(name).values) v += 0.05 * rng.normal();
    t.set_uncertainty(0.2, -0.1);
    const auto scenes = batch(2);
    std::vector<double> g;
    t.evaluate(scenes, &g);
    const auto theta = t.params().flatten();
    for (int k = 0; k < 3; ++k) {
      std::vector<double> d(theta.size() + 2);
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
        Trainer u = t;
        auto th = theta;
        for (std::size_t i = 0; i < th.size(); ++i) th[i] += s * d[i];
        u.params().unflatten(th);
        u.set_uncertainty(0.2 + s * d[theta.size()], -0.1 + s * d[theta.size() + 1]);
        return u.evaluate(scenes).total;
      };
      // The auditory losses are piecewise smooth (rectifiers, broken stick);
      // a step that straddles a kink is retried at a smaller size.
      double best = std::numeric_limits<double>::infinity(), numeric = 0.0;
      for (double eps : {1e-5, 1e-6}) {
        numeric = (shifted(eps) - shifted(-eps)) / (2.0 * eps);
        best = std::min(best, std::abs(analytic - numeric) / std::max(std::abs(numeric), 1e-6));
      }
      EXPECT_LT(best, 1e-4) << mode_name(mode) << ": " << analytic << " vs " << numeric;
    }
  }
}

TEST(Trainer, SingleTermModesLeaveUncertaintyAlone) {
  Trainer t(train_config(TrainMode::NR), tiny_processor());
  const auto r = t.train_step(batch(2));
  EXPECT_EQ(t.u_nr(), 0.0);
  EXPECT_EQ(t.u_hlc(), 0.0);
  EXPECT_TRUE(std::isnan(r.losses.l_hlc));
  EXPECT_EQ(r.losses.total, r.losses.l_nr);
  EXPECT_EQ(r.step, 1u);
  EXPECT_EQ(r.scenes, 2u);
  EXPECT_EQ(r.lr, 1e-3);
}

TEST(Trainer, StepsAreDeterministic) {
  Trainer a(train_config(TrainMode::C_NR_HLC), tiny_processor());
  Trainer b(train_config(TrainMode::C_NR_HLC), tiny_processor());
  const auto scenes = batch(2);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(a.train_step(scenes).csv_row(), b.train_step(scenes).csv_row());
  EXPECT_EQ(a.params(), b.params());
  EXPECT_EQ(a.adam(), b.adam());
}

TEST(Trainer, CheckpointResumeMatchesUninterruptedRun) {
  const auto dir = temp_dir("resume");
  SceneConfig sc;
  sc.scene_seconds = 0.1;
  sc.seed = 3;
  std::vector<std::string> straight, resumed;
  Trainer a(train_config(TrainMode::C_NR_HLC), tiny_processor());
  run_training(a, sc, corpus(), synthetic_rir_provider(), AudiogramSampler{}, 8,
               [&](const StepReport& r) { straight.push_back(r.csv_row()); });

  Trainer b(train_config(TrainMode::C_NR_HLC), tiny_processor());
  run_training(b, sc, corpus(), synthetic_rir_provider(), AudiogramSampler{}, 4,
               [&](const StepReport& r) { resumed.push_back(r.csv_row()); });
  b.save(dir / "ckpt.bin", R"({"note":"unit"})");
  auto c = Trainer::load(dir / "ckpt.bin");
  EXPECT_EQ(c.steps(), 2u);
  EXPECT_EQ(c.scenes_seen(), 4u);
  EXPECT_EQ(c.params(), b.params());
  EXPECT_EQ(c.adam(), b.adam());
  run_training(c, sc, corpus(), synthetic_rir_provider(), AudiogramSampler{}, 8,
               [&](const StepReport& r) { resumed.push_back(r.csv_row()); });
  EXPECT_EQ(straight, resumed);
  EXPECT_EQ(c.params(), a.params());
  EXPECT_EQ(c.u_nr(), a.u_nr());

  const auto m = load_trained_model(dir / "ckpt.bin");
  EXPECT_EQ(m.mode, TrainMode::C_NR_HLC);
  EXPECT_EQ(m.params, b.params());
  EXPECT_EQ(ad::Archive::load(dir / "ckpt.bin").metadata.at("manifest"), R"({"note":"unit"})");
  fs::remove_all(dir);
}

TEST(Trainer, RejectsForeignArchives) {
  ad::Archive ar;
  ar.metadata["kind"] = "something-else";
  EXPECT_THROW(Trainer::restore(ar), std::runtime_error);
  EXPECT_THROW(Trainer::restore(ad::Archive{}), std::runtime_error);
}

TEST(Trainer, NonFiniteLossNamesTheScene) {
  Trainer t(train_config(TrainMode::NR), tiny_processor());
  auto scenes = batch(1);
  scenes[0].x.samples[100] = std::numeric_limits<double>::infinity();
  try {
    t.train_step(scenes);
    FAIL() << "expected a failure";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("\"index\""), std::string::npos) << e.what();
  }
  EXPECT_THROW(t.train_step({}), std::invalid_argument);
}

TEST(Trainer, HlcModeWithNormalHearingDecreases) {
  // With NH audiograms the compensation target is the input itself.
  auto scenes = batch(2, 0, 0.1);
  for (auto& s : scenes) s.a = Audiogram{};
  Trainer t(train_config(TrainMode::HLC), tiny_processor());
  const double first = t.evaluate(scenes).total;
  for (int i = 0; i < 50; ++i) t.train_step(scenes);
  EXPECT_LT(t.evaluate(scenes).total, first);
}

TEST(Evaluate, DualHeadTable) {
  Trainer t(train_config(TrainMode::C_NR_HLC), tiny_processor());
  const TrainedModel m{TrainMode::C_NR_HLC, t.processor_config(), t.params()};
  const auto scenes = batch(2, 10, 0.1);
  EvalOptions opt;
  opt.alphas = {0.0, 0.5, 1.0};
  const auto table = evaluate_model(m, scenes, opt);
  ASSERT_EQ(table.rows.size(), 3u);
  ASSERT_EQ(table.profiles.size(), 11u);
  // Endpoint rows equal the heads evaluated on their own.
  const SpeechProcessor proc(m.config);
  for (std::size_t p = 0; p < 11; ++p) {
    double nr = 0.0, hlc = 0.0;
    for (const auto& s : scenes) {
      const auto out = proc.process(m.params, s.x, standard_audiograms()[p].audiogram);
      nr += sdr(s.y, *out.nr);
      hlc += sdr(s.y, *out.hlc);
    }
    EXPECT_EQ(table.rows[2].per_profile[p], nr / 2.0);
    EXPECT_EQ(table.rows[0].per_profile[p], hlc / 2.0);
  }
  double hi = 0.0;
  for (std::size_t p = 1; p < 11; ++p) hi += table.rows[1].per_profile[p];
  EXPECT_NEAR(table.rows[1].sdr_hi, hi / 10.0, 1e-12);
  EXPECT_EQ(table.rows[1].sdr_nh, table.rows[1].per_profile[0]);
  const auto csv = table.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "alpha,sdr_nh,sdr_hi,NH,N1,N2,N3,N4,N5,N6,N7,S1,S2,S3");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);

  opt.alphas = {};
  EXPECT_THROW(evaluate_model(m, scenes, opt), std::invalid_argument);
  opt.alphas = {1.2};
  EXPECT_THROW(evaluate_model(m, scenes, opt), std::invalid_argument);
}

TEST(Evaluate, SingleHeadAndSilentModel) {
  Trainer t(train_config(TrainMode::NR), tiny_processor());
  auto params = t.params();
  for (const auto& name : params.names())
    for (double& v : params.at(name).values) v = 0.0;
  const TrainedModel m{TrainMode::NR, t.processor_config(), params};
  const auto scenes = batch(2, 20, 0.1);
  EvalOptions opt;
  opt.alphas = {0.5};
  EXPECT_THROW(evaluate_model(m, scenes, opt), std::invalid_argument);
  opt.alphas.clear();
  const auto table = evaluate_model(m, scenes, opt);
  ASSERT_EQ(table.rows.size(), 1u);
  EXPECT_FALSE(table.rows[0].alpha);
  // All-zero weights give a silent output: error energy equals the signal.
  for (double v : table.rows[0].per_profile) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(Evaluate, ExportsPairsWithManifest) {
  const auto dir = temp_dir("export");
  Trainer t(train_config(TrainMode::C_NR_HLC), tiny_processor());
  const TrainedModel m{TrainMode::C_NR_HLC, t.processor_config(), t.params()};
  EvalOptions opt;
  opt.alphas = {0.0, 1.0};
  opt.export_dir = dir;
  opt.export_scenes = 1;
  opt.manifest_json = R"({"command":"unit"})";
  evaluate_model(m, batch(2, 30, 0.1), opt);
  EXPECT_TRUE(fs::exists(dir / "scene_0000" / "reference.wav"));
  EXPECT_TRUE(fs::exists(dir / "scene_0000" / "N3_alpha1.000.wav"));
  EXPECT_FALSE(fs::exists(dir / "scene_0001"));
  EXPECT_EQ(read_wav_comment(dir / "scene_0000" / "S1_alpha0.000.wav"), opt.manifest_json);
  std::ifstream f(dir / "scoring.csv");
  std::string line;
  int lines = 0;
  while (std::getline(f, line)) ++lines;
  EXPECT_EQ(lines, 2 + 22);  // manifest, header, 11 profiles x 2 alphas
  fs::remove_all(dir);
}

TEST(Manifest, RoundTripAndVersion) {
  auto m = RunManifest::create("train", R"({ "b": 1, "a": [1,2] })", "abc", 7);
  m.outputs = {"model.ckpt"};
  EXPECT_FALSE(m.code_version.empty());
  EXPECT_EQ(m.code_version, code_version());
  EXPECT_EQ(RunManifest::from_json_text(m.to_json_text()), m);
  EXPECT_THROW(RunManifest::create("x", "{", "", 0), std::invalid_argument);
  EXPECT_THROW(RunManifest::from_json_text("[]"), std::invalid_argument);
}

TEST(Manifest, OutputDirFromEnvironment) {
  ::setenv(kOutputDirEnv, "/tmp/jnrhlc_out", 1);
  EXPECT_EQ(default_output_dir(), fs::path("/tmp/jnrhlc_out"));
  ::unsetenv(kOutputDirEnv);
  EXPECT_EQ(default_output_dir(), fs::current_path());
}

TEST(ApplyModel, AlphaAndAudiogramContract) {
  auto cfg = tiny_processor();
  cfg.heads = {Head::NR, Head::HLC};
  cfg.audiogram_conditioning = true;
  TrainedModel dual{TrainMode::C_NR_HLC, cfg, init_processor_params(cfg, 3)};
  PortableRng rng(5);
  for (const auto& name : dual.params.names())
    for (double& v : dual.params.at(name).values) v += 0.05 * rng.normal();
  const auto x = batch(1)[0].x;
  const Audiogram& a = standard_audiogram("N3");

  const auto heads = SpeechProcessor(cfg).process(dual.params, x, a);
  EXPECT_EQ(apply_model(dual, x, a, 1.0).samples, heads.nr->samples);
  EXPECT_EQ(apply_model(dual, x, a, 0.0).samples, heads.hlc->samples);
  const auto mid = apply_model(dual, x, a, 0.25).samples;
  for (std::size_t i = 0; i < mid.size(); ++i)
    EXPECT_NEAR(mid[i], 0.25 * heads.nr->samples[i] + 0.75 * heads.hlc->samples[i], 1e-12);
  EXPECT_THROW(apply_model(dual, x, a, std::nullopt), std::invalid_argument);
  EXPECT_THROW(apply_model(dual, x, std::nullopt, 1.0), std::invalid_argument);
  EXPECT_THROW(apply_model(dual, x, a, 1.5), std::invalid_argument);

  const auto single_cfg = tiny_processor();
  const TrainedModel single{TrainMode::NR, single_cfg, init_processor_params(single_cfg, 3)};
  EXPECT_EQ(apply_model(single, x, std::nullopt, std::nullopt).samples,
            SpeechProcessor(single_cfg).process(single.params, x, std::nullopt).nr->samples);
  EXPECT_THROW(apply_model(single, x, std::nullopt, 0.5), std::invalid_argument);
}

}  // namespace
}  // namespace jnrhlc
