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

#include <benchmark/benchmark.h>

#include "jnrhlc/auditory_model.hpp"
#include "jnrhlc/objectives.hpp"
#include "jnrhlc/random.hpp"
#include "jnrhlc/trainer.hpp"

namespace jnrhlc {
namespace {

AudioSignal noise(double seconds, std::uint64_t seed = 1) {
  PortableRng rng(seed);
  std::vector<double> x(static_cast<std::size_t>(seconds * kSampleRate));
  for (double& v : x) v = 0.05 * rng.normal();
  return AudioSignal(std::move(x));
}

void BM_StftRoundTrip(benchmark::State& state) {
  const auto x = noise(1.0);
  for (auto _ : state) benchmark::DoNotOptimize(istft(stft(x)));
}
BENCHMARK(BM_StftRoundTrip)->Unit(benchmark::kMillisecond);

// range(0): 0 normal hearing, 1 the N4 profile.
void BM_AuditoryModel(benchmark::State& state) {
  const auto model = AuditoryModel::standard();
  const auto x = noise(1.0);
  std::optional<Audiogram> a;
  if (state.range(0) == 1) a = standard_audiogram("N4");
  for (auto _ : state) benchmark::DoNotOptimize(model->run(x, a));
}
BENCHMARK(BM_AuditoryModel)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_LossNrBackward(benchmark::State& state) {
  const auto model = AuditoryModel::standard();
  const auto x = noise(0.5, 2), y = noise(0.5, 3);
  for (auto _ : state) {
    ad::Tape tape;
    const auto est = tape.leaf({static_cast<int>(x.size())}, x.samples);
    const auto l = loss_nr(*model, est, tape.constant({static_cast<int>(y.size())}, y.samples), LossKind::MAE);
    benchmark::DoNotOptimize(tape.backward(l));
  }
}
BENCHMARK(BM_LossNrBackward)->Unit(benchmark::kMillisecond);

void BM_ProcessorDesk(benchmark::State& state) {
  const auto cfg = ProcessorConfig::desk({Head::NR, Head::HLC}, true);
  const SpeechProcessor proc(cfg);
  const auto params = init_processor_params(cfg, 1);
  const auto x = noise(1.0);
  const Audiogram& a = standard_audiogram("N3");
  for (auto _ : state) benchmark::DoNotOptimize(proc.process(params, x, a));
}
BENCHMARK(BM_ProcessorDesk)->Unit(benchmark::kMillisecond);

// One C-NR-HLC step, desk processor, one 0.5 s scene.
void BM_TrainStepDesk(benchmark::State& state) {
  static const Corpus corpus = Corpus::synthetic(1, 4, 4, 1.5);
  SceneConfig sc;
  sc.scene_seconds = 0.5;
  const auto batch = scene_batch(sc, corpus, synthetic_rir_provider(), AudiogramSampler{}, 0, 1);
  TrainConfig tc;
  tc.batch_size = 1;
  Trainer t(tc, ProcessorConfig::desk({Head::NR}, false));
  for (auto _ : state) benchmark::DoNotOptimize(t.train_step(batch));
}
BENCHMARK(BM_TrainStepDesk)->Unit(benchmark::kMillisecond)->Iterations(5);

}  // namespace
}  // namespace jnrhlc

BENCHMARK_MAIN();
