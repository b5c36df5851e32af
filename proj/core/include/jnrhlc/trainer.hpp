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

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jnrhlc/ad/archive.hpp"
#include "jnrhlc/ad/params.hpp"
#include "jnrhlc/auditory_model.hpp"
#include "jnrhlc/objectives.hpp"
#include "jnrhlc/processor.hpp"
#include "jnrhlc/scene.hpp"

namespace jnrhlc {

// SDR: NR head, negative SDR. NR: NR head, auditory NR loss. HLC: conditioned
// HLC head, compensation loss. NR-HLC: one conditioned head, joint loss.
// C-NR-HLC: conditioned NR and HLC heads, uncertainty-weighted sum.
enum class TrainMode { SDR, NR, HLC, NR_HLC, C_NR_HLC };

std::string mode_name(TrainMode m);
// sdr | nr | hlc | nr-hlc | c-nr-hlc (case-insensitive, '_' accepted for '-').
TrainMode parse_mode(const std::string& s);

// `base` with the heads and conditioning the mode needs.
ProcessorConfig processor_for_mode(TrainMode mode, ProcessorConfig base);

struct TrainConfig {
  TrainMode mode = TrainMode::C_NR_HLC;
  LossKind loss = LossKind::MAE;  // unused in SDR mode
  int batch_size = 4;
  std::uint64_t total_scenes = 20000;
  double lr0 = 1e-3;
  double lr_decay = 0.99;
  std::uint64_t decay_every_scenes = 10000;
  double clip_norm = 5.0;
  // The uncertainty parameters use lr * u_lr_scale.
  double u_lr_scale = 1.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;  // parameter initialisation

  void validate() const;
  std::string to_json_text() const;
  static TrainConfig from_json_text(const std::string& text);

  bool operator==(const TrainConfig&) const = default;
};

// lr0 * decay^floor(scene_count / decay_every_scenes).
double lr_at(const TrainConfig& cfg, std::uint64_t scene_count);

// Scales g in place so its L2 norm is at most max_norm; returns the norm
// before clipping.
double clip_gradients(std::span<double> g, double max_norm);

// Bias-corrected Adam over a flat parameter vector.
class AdamState {
 public:
  AdamState() = default;
  AdamState(std::size_t n, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  // Advances the step counter even for zero gradients.
  void update(std::span<double> params, std::span<const double> grad, double lr);
  // As update() but with a per-segment learning rate: entries [0, split)
  // use lr_a, the rest lr_b. One step counter covers both.
  void update(std::span<double> params, std::span<const double> grad, std::size_t split, double lr_a, double lr_b);

  std::size_t size() const { return m_.size(); }
  std::uint64_t step() const { return step_; }
  const std::vector<double>& m() const { return m_; }
  const std::vector<double>& v() const { return v_; }
  void restore(std::vector<double> m, std::vector<double> v, std::uint64_t step);

  bool operator==(const AdamState&) const = default;

 private:
  std::vector<double> m_, v_;
  std::uint64_t step_ = 0;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
};

// Batch-mean losses. Terms a mode does not use are NaN.
struct BatchLosses {
  double l_nr = 0.0;
  double l_hlc = 0.0;
  double total = 0.0;
};

struct StepReport {
  std::uint64_t step = 0;    // 1-based index of the step just taken
  std::uint64_t scenes = 0;  // scenes consumed after this step
  double lr = 0.0;
  BatchLosses losses;
  double u_nr = 0.0;
  double u_hlc = 0.0;
  double grad_norm = 0.0;  // before clipping

  static std::string csv_header();
  std::string csv_row() const;
};

// Optimisation state for one model: parameters, uncertainty weights, Adam
// moments and counters. A checkpoint stores all of it, so a resumed run
// continues bit-identically.
class Trainer {
 public:
  // Parameters come from init_processor_params(processor_for_mode(...), cfg.seed).
  Trainer(TrainConfig cfg, ProcessorConfig processor, std::shared_ptr<const AuditoryModel> model = nullptr);

  const TrainConfig& config() const { return cfg_; }
  const ProcessorConfig& processor_config() const { return proc_.config(); }
  const SpeechProcessor& processor() const { return proc_; }
  const AuditoryModel& auditory_model() const { return *model_; }
  const ad::ParamSet& params() const { return params_; }
  ad::ParamSet& params() { return params_; }
  double u_nr() const { return u_nr_; }
  double u_hlc() const { return u_hlc_; }
  void set_uncertainty(double u_nr, double u_hlc);
  std::uint64_t steps() const { return step_; }
  std::uint64_t scenes_seen() const { return scenes_; }
  const AdamState& adam() const { return adam_; }

  // Losses and the gradient over [theta, u_nr, u_hlc] without updating.
  // Throws std::runtime_error naming the scene if a loss is not finite.
  BatchLosses evaluate(const std::vector<Scene>& batch, std::vector<double>* grad = nullptr) const;

  // Forward, backward, clip, Adam; the learning rate follows the scene
  // counter before the step, which then advances by the batch size.
  StepReport train_step(const std::vector<Scene>& batch);

  // Metadata carries the configs, counters and `manifest_json`.
  ad::Archive checkpoint(const std::string& manifest_json = "{}") const;
  void save(const std::filesystem::path& path, const std::string& manifest_json = "{}") const;
  static Trainer restore(const ad::Archive& ar, std::shared_ptr<const AuditoryModel> model = nullptr);
  static Trainer load(const std::filesystem::path& path, std::shared_ptr<const AuditoryModel> model = nullptr);

 private:
  TrainConfig cfg_;
  SpeechProcessor proc_;
  std::shared_ptr<const AuditoryModel> model_;
  ad::ParamSet params_;
  double u_nr_ = 0.0, u_hlc_ = 0.0;
  AdamState adam_;
  std::uint64_t step_ = 0;
  std::uint64_t scenes_ = 0;
};

// Everything needed to use a trained model.
struct TrainedModel {
  TrainMode mode = TrainMode::NR;
  ProcessorConfig config;
  ad::ParamSet params;
};
TrainedModel load_trained_model(const std::filesystem::path& checkpoint);

// Runs a trained model on one signal. Dual-head models need `alpha` (1 gives
// the NR head, 0 the HLC head, anything between the samplewise mix);
// single-head models reject it. Conditioned models need an audiogram, others
// ignore it. Throws std::invalid_argument on any of these mismatches.
AudioSignal apply_model(const TrainedModel& model, const AudioSignal& x, const std::optional<Audiogram>& a,
                        std::optional<double> alpha);

// Scenes [first, first + count) of the stream described by `cfg`.
std::vector<Scene> scene_batch(const SceneConfig& cfg, const Corpus& corpus, const RirProvider& rirs,
                               const AudiogramSampler& sampler, std::uint64_t first, int count);

// Steps until `until_scenes` scenes have been consumed, drawing batch k from
// the scene stream at the trainer's scene counter.
void run_training(Trainer& trainer, const SceneConfig& scenes, const Corpus& corpus, const RirProvider& rirs,
                  const AudiogramSampler& sampler, std::uint64_t until_scenes,
                  const std::function<void(const StepReport&)>& on_step);

// ---------------------------------------------------------------- evaluation

struct EvalOptions {
  // Empty for single-head models; required (non-empty) for dual-head ones.
  std::vector<double> alphas;
  std::vector<NamedAudiogram> profiles = standard_audiograms();
  // When set, (processed, reference) WAV pairs and scoring.csv go here.
  std::optional<std::filesystem::path> export_dir;
  int export_scenes = 10;  // leading scenes exported; negative for all
  std::string manifest_json = "{}";
};

struct EvalRow {
  std::optional<double> alpha;  // unset for single-head models
  double sdr_nh = 0.0;          // mean over scenes processed with the NH profile
  double sdr_hi = 0.0;          // mean over scenes x the hearing-impaired profiles
  std::vector<double> per_profile;
};

struct EvalTable {
  std::vector<std::string> profiles;
  std::vector<EvalRow> rows;
  double input_sdr = 0.0;  // mean SDR of the unprocessed mixtures

  // alpha,sdr_nh,sdr_hi,<profile>... one row per condition.
  std::string to_csv() const;
};

// Every scene is processed once per profile (the profile audiogram replaces
// the scene's own); SDR is measured against y. For dual-head models each alpha
// mixes the two outputs; alpha 1 is the NR head, alpha 0 the HLC head.
EvalTable evaluate_model(const TrainedModel& model, const std::vector<Scene>& scenes, const EvalOptions& options);

}  // namespace jnrhlc
