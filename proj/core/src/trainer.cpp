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

#include "jnrhlc/trainer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "jnrhlc/ad/ops.hpp"
#include "jnrhlc/wav.hpp"

namespace jnrhlc {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr const char* kCheckpointKind = "jnrhlc-checkpoint";
constexpr int kCheckpointVersion = 1;

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

bool uses_nr_term(TrainMode m) { return m == TrainMode::SDR || m == TrainMode::NR || m == TrainMode::C_NR_HLC; }
bool uses_hlc_term(TrainMode m) { return m == TrainMode::HLC || m == TrainMode::C_NR_HLC; }

}  // namespace

std::string mode_name(TrainMode m) {
  switch (m) {
    case TrainMode::SDR: return "sdr";
    case TrainMode::NR: return "nr";
    case TrainMode::HLC: return "hlc";
    case TrainMode::NR_HLC: return "nr-hlc";
    case TrainMode::C_NR_HLC: return "c-nr-hlc";
  }
  return "?";
}

TrainMode parse_mode(const std::string& s) {
  std::string l = s;
  for (char& c : l) c = c == '_' ? '-' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  for (auto m : {TrainMode::SDR, TrainMode::NR, TrainMode::HLC, TrainMode::NR_HLC, TrainMode::C_NR_HLC})
    if (l == mode_name(m)) return m;
  throw std::invalid_argument("unknown mode '" + s + "' (expected sdr, nr, hlc, nr-hlc or c-nr-hlc)");
}

ProcessorConfig processor_for_mode(TrainMode mode, ProcessorConfig base) {
  switch (mode) {
    case TrainMode::SDR:
    case TrainMode::NR:
      base.heads = {Head::NR};
      base.audiogram_conditioning = false;
      break;
    case TrainMode::HLC:
    case TrainMode::NR_HLC:
      base.heads = {Head::HLC};
      base.audiogram_conditioning = true;
      break;
    case TrainMode::C_NR_HLC:
      base.heads = {Head::NR, Head::HLC};
      base.audiogram_conditioning = true;
      break;
  }
  return base;
}

// ---------------------------------------------------------------- config

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("train config: batch_size must be positive");
  if (total_scenes < 1) throw std::invalid_argument("train config: total_scenes must be positive");
  if (!(lr0 > 0.0)) throw std::invalid_argument("train config: lr0 must be positive");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw std::invalid_argument("train config: lr_decay must lie in (0, 1]");
  if (decay_every_scenes < 1) throw std::invalid_argument("train config: decay_every_scenes must be positive");
  if (!(clip_norm > 0.0)) throw std::invalid_argument("train config: clip_norm must be positive");
  if (!(u_lr_scale >= 0.0)) throw std::invalid_argument("train config: u_lr_scale must be non-negative");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0))
    throw std::invalid_argument("train config: Adam betas must lie in [0, 1)");
  if (!(adam_eps > 0.0)) throw std::invalid_argument("train config: adam_eps must be positive");
}

std::string TrainConfig::to_json_text() const {
  json j;
  j["mode"] = mode_name(mode);
  j["loss"] = loss_kind_name(loss);
  j["batch_size"] = batch_size;
  j["total_scenes"] = total_scenes;
  j["lr0"] = lr0;
  j["lr_decay"] = lr_decay;
  j["decay_every_scenes"] = decay_every_scenes;
  j["clip_norm"] = clip_norm;
  j["u_lr_scale"] = u_lr_scale;
  j["adam_beta1"] = adam_beta1;
  j["adam_beta2"] = adam_beta2;
  j["adam_eps"] = adam_eps;
  j["seed"] = seed;
  return j.dump();
}

TrainConfig TrainConfig::from_json_text(const std::string& text) {
  TrainConfig c;
  try {
    const json j = json::parse(text);
    c.mode = parse_mode(j.at("mode").get<std::string>());
    c.loss = parse_loss_kind(j.at("loss").get<std::string>());
    c.batch_size = j.at("batch_size").get<int>();
    c.total_scenes = j.at("total_scenes").get<std::uint64_t>();
    c.lr0 = j.at("lr0").get<double>();
    c.lr_decay = j.at("lr_decay").get<double>();
    c.decay_every_scenes = j.at("decay_every_scenes").get<std::uint64_t>();
    c.clip_norm = j.at("clip_norm").get<double>();
    c.u_lr_scale = j.at("u_lr_scale").get<double>();
    c.adam_beta1 = j.at("adam_beta1").get<double>();
    c.adam_beta2 = j.at("adam_beta2").get<double>();
    c.adam_eps = j.at("adam_eps").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

double lr_at(const TrainConfig& cfg, std::uint64_t scene_count) {
  return cfg.lr0 * std::pow(cfg.lr_decay, static_cast<double>(scene_count / cfg.decay_every_scenes));
}

double clip_gradients(std::span<double> g, double max_norm) {
  double sq = 0.0;
  for (double v : g) sq += v * v;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (double& v : g) v *= s;
  }
  return norm;
}

// ---------------------------------------------------------------- Adam

AdamState::AdamState(std::size_t n, double beta1, double beta2, double eps)
    : m_(n, 0.0), v_(n, 0.0), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void AdamState::update(std::span<double> params, std::span<const double> grad, double lr) {
  update(params, grad, params.size(), lr, lr);
}

void AdamState::update(std::span<double> params, std::span<const double> grad, std::size_t split, double lr_a,
                       double lr_b) {
  if (params.size() != m_.size() || grad.size() != m_.size())
    throw std::invalid_argument("adam: expected " + std::to_string(m_.size()) + " parameters and gradients");
  ++step_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    const double lr = i < split ? lr_a : lr_b;
    params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

void AdamState::restore(std::vector<double> m, std::vector<double> v, std::uint64_t step) {
  if (m.size() != m_.size() || v.size() != v_.size()) throw std::invalid_argument("adam: moment size mismatch");
  m_ = std::move(m);
  v_ = std::move(v);
  step_ = step;
}

// ---------------------------------------------------------------- reports

std::string StepReport::csv_header() { return "step,scenes,lr,l_nr,l_hlc,u_nr,u_hlc,total,grad_norm"; }

std::string StepReport::csv_row() const {
  std::ostringstream os;
  os << step << ',' << scenes << ',' << fmt(lr) << ',' << fmt(losses.l_nr) << ',' << fmt(losses.l_hlc) << ','
     << fmt(u_nr) << ',' << fmt(u_hlc) << ',' << fmt(losses.total) << ',' << fmt(grad_norm);
  return os.str();
}

// ---------------------------------------------------------------- trainer

Trainer::Trainer(TrainConfig cfg, ProcessorConfig processor, std::shared_ptr<const AuditoryModel> model)
    : cfg_(cfg), proc_(processor_for_mode(cfg.mode, std::move(processor))), model_(std::move(model)) {
  cfg_.validate();
  if (!model_) model_ = AuditoryModel::standard();
  params_ = init_processor_params(proc_.config(), cfg_.seed);
  adam_ = AdamState(params_.scalar_count() + 2, cfg_.adam_beta1, cfg_.adam_beta2, cfg_.adam_eps);
}

void Trainer::set_uncertainty(double u_nr, double u_hlc) {
  if (!std::isfinite(u_nr) || !std::isfinite(u_hlc)) throw std::invalid_argument("uncertainty parameters must be finite");
  u_nr_ = u_nr;
  u_hlc_ = u_hlc;
}

BatchLosses Trainer::evaluate(const std::vector<Scene>& batch, std::vector<double>* grad) const {
  if (batch.empty()) throw std::invalid_argument("train step: empty batch");
  const std::size_t n_theta = params_.scalar_count();
  if (grad) grad->assign(n_theta + 2, 0.0);
  const double inv = 1.0 / static_cast<double>(batch.size());
  const bool cond = proc_.config().audiogram_conditioning;
  const bool want = grad != nullptr;
  double sum_nr = 0.0, sum_hlc = 0.0, sum_single = 0.0;

  for (const auto& scene : batch) {
    ad::Tape tape;
    const ad::BoundParams bp(tape, params_, want);
    const int n = static_cast<int>(scene.x.size());
    if (scene.y.size() != scene.x.size()) throw std::invalid_argument("train step: x and y lengths differ");
    const auto x = tape.constant({n}, scene.x.samples);
    const auto y = tape.constant({n}, scene.y.samples);
    const auto out = proc_.forward(bp, x, cond ? std::optional<Audiogram>(scene.a) : std::nullopt);

    ad::Tensor objective;
    ad::Tensor un, uh;
    double l_nr = kNaN, l_hlc = kNaN;
    switch (cfg_.mode) {
      case TrainMode::SDR:
        objective = sdr_loss(scene.y.samples, *out.nr);
        l_nr = objective.item();
        break;
      case TrainMode::NR:
        objective = loss_nr(*model_, *out.nr, y, cfg_.loss);
        l_nr = objective.item();
        break;
      case TrainMode::HLC:
        objective = loss_hlc(*model_, *out.hlc, x, scene.a, cfg_.loss);
        l_hlc = objective.item();
        break;
      case TrainMode::NR_HLC:
        objective = loss_joint(*model_, *out.hlc, y, scene.a, cfg_.loss);
        break;
      case TrainMode::C_NR_HLC: {
        const auto lnr = loss_nr(*model_, *out.nr, y, cfg_.loss);
        const auto lhlc = loss_hlc(*model_, *out.hlc, x, scene.a, cfg_.loss);
        l_nr = lnr.item();
        l_hlc = lhlc.item();
        // Per-scene uncertainty-weighted form; its batch mean equals the form applied to the
        // batch-mean losses because it is affine in each loss.
        un = tape.scalar(u_nr_, want);
        uh = tape.scalar(u_hlc_, want);
        objective = loss_controllable(lnr, lhlc, un, uh);
        break;
      }
    }
    if (!std::isfinite(objective.item()))
      throw std::runtime_error("non-finite loss at step " + std::to_string(step_ + 1) + " on scene " +
                               scene.meta.to_json_text());
    if (uses_nr_term(cfg_.mode)) sum_nr += l_nr;
    if (uses_hlc_term(cfg_.mode)) sum_hlc += l_hlc;
    sum_single += objective.item();

    if (want) {
      const auto g = tape.backward(objective);
      const auto flat = bp.flat_gradient(g);
      for (std::size_t i = 0; i < n_theta; ++i) (*grad)[i] += inv * flat[i];
      if (cfg_.mode == TrainMode::C_NR_HLC) {
        (*grad)[n_theta] += inv * g.at(un)[0];
        (*grad)[n_theta + 1] += inv * g.at(uh)[0];
      }
    }
  }

  BatchLosses out;
  out.l_nr = uses_nr_term(cfg_.mode) ? sum_nr * inv : kNaN;
  out.l_hlc = uses_hlc_term(cfg_.mode) ? sum_hlc * inv : kNaN;
  if (cfg_.mode == TrainMode::C_NR_HLC) {
    out.total = out.l_nr * std::exp(-u_nr_) + u_nr_ + out.l_hlc * std::exp(-u_hlc_) + u_hlc_;
  } else {
    out.total = sum_single * inv;
  }
  return out;
}

StepReport Trainer::train_step(const std::vector<Scene>& batch) {
  std::vector<double> g;
  const auto losses = evaluate(batch, &g);
  StepReport r;
  r.grad_norm = clip_gradients(g, cfg_.clip_norm);
  r.lr = lr_at(cfg_, scenes_);
  auto flat = params_.flatten();
  const std::size_t n_theta = flat.size();
  flat.push_back(u_nr_);
  flat.push_back(u_hlc_);
  adam_.update(flat, g, n_theta, r.lr, r.lr * cfg_.u_lr_scale);
  u_hlc_ = flat.back();
  flat.pop_back();
  u_nr_ = flat.back();
  flat.pop_back();
  params_.unflatten(flat);
  ++step_;
  scenes_ += batch.size();
  r.step = step_;
  r.scenes = scenes_;
  r.losses = losses;
  r.u_nr = u_nr_;
  r.u_hlc = u_hlc_;
  return r;
}

ad::Archive Trainer::checkpoint(const std::string& manifest_json) const {
  ad::Archive ar;
  ar.metadata["kind"] = kCheckpointKind;
  ar.metadata["checkpoint_version"] = std::to_string(kCheckpointVersion);
  ar.metadata["train_config"] = cfg_.to_json_text();
  ar.metadata["processor_config"] = proc_.config().to_json_text();
  ar.metadata["steps"] = std::to_string(step_);
  ar.metadata["scenes"] = std::to_string(scenes_);
  ar.metadata["adam_step"] = std::to_string(adam_.step());
  ar.metadata["manifest"] = manifest_json;
  ar.put_params("theta.", params_);
  ar.arrays["u"] = {{2}, {u_nr_, u_hlc_}};
  const int n = static_cast<int>(adam_.size());
  ar.arrays["adam.m"] = {{n}, adam_.m()};
  ar.arrays["adam.v"] = {{n}, adam_.v()};
  return ar;
}

void Trainer::save(const std::filesystem::path& path, const std::string& manifest_json) const {
  checkpoint(manifest_json).save(path);
}

namespace {

const std::string& meta(const ad::Archive& ar, const std::string& key) {
  const auto it = ar.metadata.find(key);
  if (it == ar.metadata.end()) throw std::runtime_error("checkpoint: missing '" + key + "'");
  return it->second;
}

void check_kind(const ad::Archive& ar) {
  if (meta(ar, "kind") != kCheckpointKind) throw std::runtime_error("not a jnrhlc training checkpoint");
  if (meta(ar, "checkpoint_version") != std::to_string(kCheckpointVersion))
    throw std::runtime_error("unsupported checkpoint version " + meta(ar, "checkpoint_version"));
}

const ad::NamedArray& array(const ad::Archive& ar, const std::string& key) {
  const auto it = ar.arrays.find(key);
  if (it == ar.arrays.end()) throw std::runtime_error("checkpoint: missing array '" + key + "'");
  return it->second;
}

}  // namespace

Trainer Trainer::restore(const ad::Archive& ar, std::shared_ptr<const AuditoryModel> model) {
  check_kind(ar);
  Trainer t(TrainConfig::from_json_text(meta(ar, "train_config")),
            ProcessorConfig::from_json_text(meta(ar, "processor_config")), std::move(model));
  ar.get_params("theta.", t.params_);
  const auto& u = array(ar, "u");
  if (u.values.size() != 2) throw std::runtime_error("checkpoint: malformed uncertainty array");
  t.u_nr_ = u.values[0];
  t.u_hlc_ = u.values[1];
  t.adam_.restore(array(ar, "adam.m").values, array(ar, "adam.v").values, std::stoull(meta(ar, "adam_step")));
  t.step_ = std::stoull(meta(ar, "steps"));
  t.scenes_ = std::stoull(meta(ar, "scenes"));
  return t;
}

Trainer Trainer::load(const std::filesystem::path& path, std::shared_ptr<const AuditoryModel> model) {
  return restore(ad::Archive::load(path), std::move(model));
}

TrainedModel load_trained_model(const std::filesystem::path& checkpoint) {
  const auto ar = ad::Archive::load(checkpoint);
  check_kind(ar);
  TrainedModel m;
  m.mode = TrainConfig::from_json_text(meta(ar, "train_config")).mode;
  m.config = ProcessorConfig::from_json_text(meta(ar, "processor_config"));
  m.params = init_processor_params(m.config, 0);
  ar.get_params("theta.", m.params);
  return m;
}

std::vector<Scene> scene_batch(const SceneConfig& cfg, const Corpus& corpus, const RirProvider& rirs,
                               const AudiogramSampler& sampler, std::uint64_t first, int count) {
  std::vector<Scene> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int i = 0; i < count; ++i) out.push_back(generate_scene(cfg, corpus, rirs, sampler, first + static_cast<std::uint64_t>(i)));
  return out;
}

void run_training(Trainer& trainer, const SceneConfig& scenes, const Corpus& corpus, const RirProvider& rirs,
                  const AudiogramSampler& sampler, std::uint64_t until_scenes,
                  const std::function<void(const StepReport&)>& on_step) {
  while (trainer.scenes_seen() < until_scenes) {
    const auto left = until_scenes - trainer.scenes_seen();
    const int count = static_cast<int>(std::min<std::uint64_t>(left, static_cast<std::uint64_t>(trainer.config().batch_size)));
    const auto batch = scene_batch(scenes, corpus, rirs, sampler, trainer.scenes_seen(), count);
    const auto report = trainer.train_step(batch);
    if (on_step) on_step(report);
  }
}

// ---------------------------------------------------------------- evaluation

std::string EvalTable::to_csv() const {
  std::ostringstream os;
  os << "alpha,sdr_nh,sdr_hi";
  for (const auto& p : profiles) os << ',' << p;
  os << '\n';
  for (const auto& r : rows) {
    os << (r.alpha ? fmt_short(*r.alpha) : std::string("-")) << ',' << fmt_short(r.sdr_nh) << ',' << fmt_short(r.sdr_hi);
    for (double v : r.per_profile) os << ',' << fmt_short(v);
    os << '\n';
  }
  return os.str();
}

AudioSignal apply_model(const TrainedModel& model, const AudioSignal& x, const std::optional<Audiogram>& a,
                        std::optional<double> alpha) {
  const bool dual = model.config.heads.size() == 2;
  if (dual && !alpha) throw std::invalid_argument("process: a dual-head model needs alpha");
  if (!dual && alpha) throw std::invalid_argument("process: alpha applies to dual-head models only");
  const bool cond = model.config.audiogram_conditioning;
  if (cond && !a) throw std::invalid_argument("process: the model is audiogram-conditioned and needs an audiogram");
  const SpeechProcessor proc(model.config);
  const auto out = proc.process(model.params, x, cond ? a : std::nullopt);
  if (dual) return mix_outputs(*out.nr, *out.hlc, *alpha);
  return out.nr ? *out.nr : *out.hlc;
}

EvalTable evaluate_model(const TrainedModel& model, const std::vector<Scene>& scenes, const EvalOptions& options) {
  if (scenes.empty()) throw std::invalid_argument("evaluate: no scenes");
  if (options.profiles.empty()) throw std::invalid_argument("evaluate: no audiogram profiles");
  const bool dual = model.config.heads.size() == 2;
  if (dual && options.alphas.empty()) throw std::invalid_argument("evaluate: a dual-head model needs at least one alpha");
  if (!dual && !options.alphas.empty()) throw std::invalid_argument("evaluate: alpha applies to dual-head models only");
  for (double a : options.alphas)
    if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("evaluate: alpha must lie in [0, 1]");

  const SpeechProcessor proc(model.config);
  const bool cond = model.config.audiogram_conditioning;
  const std::size_t n_rows = dual ? options.alphas.size() : 1;
  const std::size_t n_prof = options.profiles.size();
  std::vector<std::vector<double>> acc(n_rows, std::vector<double>(n_prof, 0.0));

  std::ostringstream scoring;
  if (options.export_dir) {
    std::filesystem::create_directories(*options.export_dir);
    scoring << "processed,reference,scene,profile,alpha,thresholds_db_hl\n";
  }

  EvalTable table;
  for (const auto& p : options.profiles) table.profiles.push_back(p.name);
  double input_sum = 0.0;

  for (std::size_t si = 0; si < scenes.size(); ++si) {
    const auto& scene = scenes[si];
    input_sum += sdr(scene.y, scene.x);
    const bool exporting = options.export_dir && (options.export_scenes < 0 || si < static_cast<std::size_t>(options.export_scenes));
    char scene_name[32];
    std::snprintf(scene_name, sizeof scene_name, "scene_%04zu", si);
    std::filesystem::path scene_dir;
    if (exporting) {
      scene_dir = *options.export_dir / scene_name;
      std::filesystem::create_directories(scene_dir);
      write_wav(scene_dir / "reference.wav", scene.y, options.manifest_json);
    }

    std::optional<SpeechProcessor::Signals> shared;
    if (!cond) shared = proc.process(model.params, scene.x, std::nullopt);
    for (std::size_t pi = 0; pi < n_prof; ++pi) {
      const auto& profile = options.profiles[pi];
      const auto out = cond ? proc.process(model.params, scene.x, profile.audiogram) : *shared;
      for (std::size_t r = 0; r < n_rows; ++r) {
        const AudioSignal est = dual ? mix_outputs(*out.nr, *out.hlc, options.alphas[r]) : (out.nr ? *out.nr : *out.hlc);
        acc[r][pi] += sdr(scene.y, est);
        if (exporting) {
          std::string file = profile.name;
          if (dual) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "_alpha%.3f", options.alphas[r]);
            file += buf;
          }
          file += ".wav";
          write_wav(scene_dir / file, est, options.manifest_json);
          scoring << scene_name << '/' << file << ',' << scene_name << "/reference.wav," << scene_name << ','
                  << profile.name << ',' << (dual ? fmt_short(options.alphas[r]) : std::string("-")) << ',';
          for (std::size_t k = 0; k < profile.audiogram.thresholds.size(); ++k)
            scoring << (k ? ";" : "") << profile.audiogram.thresholds[k];
          scoring << '\n';
        }
      }
    }
  }

  const double inv = 1.0 / static_cast<double>(scenes.size());
  for (std::size_t r = 0; r < n_rows; ++r) {
    EvalRow row;
    if (dual) row.alpha = options.alphas[r];
    double nh = 0.0, hi = 0.0;
    int n_nh = 0, n_hi = 0;
    for (std::size_t pi = 0; pi < n_prof; ++pi) {
      const double mean = acc[r][pi] * inv;
      row.per_profile.push_back(mean);
      if (options.profiles[pi].audiogram.is_normal()) {
        nh += mean;
        ++n_nh;
      } else {
        hi += mean;
        ++n_hi;
      }
    }
    row.sdr_nh = n_nh ? nh / n_nh : kNaN;
    row.sdr_hi = n_hi ? hi / n_hi : kNaN;
    table.rows.push_back(std::move(row));
  }
  table.input_sdr = input_sum * inv;

  if (options.export_dir) {
    std::ofstream f(*options.export_dir / "scoring.csv");
    f << "# manifest: " << options.manifest_json << '\n' << scoring.str();
    if (!f) throw std::runtime_error("cannot write scoring.csv");
  }
  return table;
}

}  // namespace jnrhlc
