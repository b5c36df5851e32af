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

#include "commands.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "jnrhlc/auditory_model.hpp"
#include "jnrhlc/drnl.hpp"
#include "jnrhlc/gradcheck_suites.hpp"
#include "jnrhlc/manifest.hpp"
#include "jnrhlc/trainer.hpp"
#include "jnrhlc/wav.hpp"
#include "run_config.hpp"

namespace jnrhlc::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Relative output paths resolve against $JNRHLC_OUTPUT_DIR (or the working
// directory when it is unset).
fs::path output_path(const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : default_output_dir() / path;
}

WavFormat parse_format(const std::string& s) {
  if (s == "f32") return WavFormat::Float32;
  if (s == "f64") return WavFormat::Float64;
  throw UsageError("--format must be f32 or f64");
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string config, corpus, out = "run", mode, loss, preset, resume;
  int batch_size = 0, channels = 0, layers = -1;
  std::uint64_t scenes = 0, seed = 0, checkpoint_every = 0;
  double lr = 0.0, scene_seconds = 0.0;
  int print_every = 10;
};

int run_train(const TrainArgs& a, const CLI::App& sub, std::ostream& out) {
  auto given = [&](const char* name) { return sub.count(name) > 0; };
  const fs::path out_dir = output_path(a.out);

  std::optional<Trainer> trainer;
  std::optional<RunManifest> resumed_from;
  RunConfig cfg;
  if (given("--resume")) {
    for (const char* f : {"--config", "--corpus", "--mode", "--loss", "--preset", "--batch-size", "--channels",
                          "--layers", "--seed", "--lr", "--scene-seconds"})
      if (given(f)) throw UsageError(std::string("--resume takes the configuration from the checkpoint; drop ") + f);
    const ad::Archive ar = ad::Archive::load(a.resume);
    const auto it = ar.metadata.find("manifest");
    if (it == ar.metadata.end()) throw std::runtime_error("checkpoint has no run manifest");
    resumed_from = RunManifest::from_json_text(it->second);
    cfg = RunConfig::from_json_text(resumed_from->config_json);
    trainer.emplace(Trainer::restore(ar));
    cfg.train = trainer->config();
  } else {
    if (given("--config")) cfg = RunConfig::load(a.config);
    if (given("--mode")) cfg.train.mode = parse_mode(a.mode);
    if (given("--loss")) {
      cfg.train.loss = parse_loss_kind(a.loss);
      cfg.loss_given = true;
    }
    if (cfg.train.mode == TrainMode::SDR && cfg.loss_given)
      throw UsageError("mode sdr trains on negative SDR; the auditory loss (--loss) does not apply");
    if (given("--preset")) {
      cfg.processor_preset = a.preset;
      cfg.processor = processor_preset(a.preset);
    }
    if (given("--channels")) cfg.processor.channels = a.channels;
    if (given("--layers")) cfg.processor.layers = a.layers;
    if (given("--batch-size")) cfg.train.batch_size = a.batch_size;
    if (given("--seed")) {
      cfg.train.seed = a.seed;
      cfg.scenes.seed = a.seed;
    }
    if (given("--lr")) cfg.train.lr0 = a.lr;
    if (given("--scene-seconds")) cfg.scenes.scene_seconds = a.scene_seconds;
    if (given("--corpus")) cfg.corpus = a.corpus;
  }
  if (given("--scenes")) cfg.train.total_scenes = a.scenes;
  if (given("--checkpoint-every")) cfg.checkpoint_every_scenes = a.checkpoint_every;
  cfg.train.validate();
  cfg.scenes.validate();
  cfg.processor = processor_for_mode(cfg.train.mode, cfg.processor);
  cfg.processor.validate();

  const Corpus corpus = open_corpus(cfg.corpus, cfg.synthetic_corpus);
  if (resumed_from) {
    if (resumed_from->corpus_hash != corpus.hash())
      throw std::runtime_error("corpus differs from the one the checkpoint was trained on");
  } else {
    trainer.emplace(cfg.train, cfg.processor);
  }
  if (trainer->scenes_seen() >= cfg.train.total_scenes)
    throw UsageError("the checkpoint has already seen " + std::to_string(trainer->scenes_seen()) +
                     " scenes; raise --scenes to continue");

  fs::create_directories(out_dir);
  auto manifest = RunManifest::create("train", cfg.to_json_text(), corpus.hash(), cfg.train.seed);
  manifest.outputs = {(out_dir / "checkpoint.bin").string(), (out_dir / "train_log.csv").string(),
                      (out_dir / "run_manifest.json").string()};
  const std::string mjson = manifest.to_json_text();
  write_text(out_dir / "run_manifest.json", mjson + "\n");

  std::ofstream log(out_dir / "train_log.csv", std::ios::trunc);
  if (!log) throw std::runtime_error("cannot write " + (out_dir / "train_log.csv").string());
  log << "# manifest: " << mjson << "\n" << StepReport::csv_header() << "\n";
  out << "training " << mode_name(cfg.train.mode) << " (" << trainer->params().scalar_count() << " parameters) on "
      << cfg.corpus << ", " << trainer->scenes_seen() << " -> " << cfg.train.total_scenes << " scenes\n";

  const std::uint64_t every = cfg.checkpoint_every_scenes;
  std::uint64_t saved_bucket = every > 0 ? trainer->scenes_seen() / every : 0;
  run_training(*trainer, cfg.scenes, corpus, synthetic_rir_provider(), AudiogramSampler{}, cfg.train.total_scenes,
               [&](const StepReport& r) {
                 log << r.csv_row() << "\n";
                 log.flush();
                 if (a.print_every > 0 && r.step % static_cast<std::uint64_t>(a.print_every) == 0)
                   out << r.csv_row() << "\n";
                 if (every > 0 && r.scenes / every > saved_bucket) {
                   saved_bucket = r.scenes / every;
                   char name[48];
                   std::snprintf(name, sizeof name, "checkpoint_%08llu.bin", static_cast<unsigned long long>(r.scenes));
                   trainer->save(out_dir / name, mjson);
                 }
               });
  trainer->save(out_dir / "checkpoint.bin", mjson);
  out << "wrote " << (out_dir / "checkpoint.bin").string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- process

struct ProcessArgs {
  std::string checkpoint, in, out, audiogram, format = "f32";
  double alpha = 1.0;
};

int run_process(const ProcessArgs& a, const CLI::App& sub, std::ostream& out) {
  const TrainedModel model = load_trained_model(a.checkpoint);
  const bool dual = model.config.heads.size() == 2;
  std::optional<double> alpha;
  if (sub.count("--alpha")) alpha = a.alpha;
  if (alpha && !dual) throw UsageError("--alpha applies to dual-head (c-nr-hlc) checkpoints only");
  if (!alpha && dual) throw UsageError("this checkpoint has NR and HLC heads; choose the mix with --alpha");
  if (alpha && !(*alpha >= 0.0 && *alpha <= 1.0)) throw UsageError("--alpha must lie in [0, 1]");
  std::optional<Audiogram> a_opt;
  if (sub.count("--audiogram")) a_opt = resolve_audiogram(a.audiogram);
  if (model.config.audiogram_conditioning && !a_opt)
    throw UsageError("this checkpoint is audiogram-conditioned; pass --audiogram");
  const WavFormat format = parse_format(a.format);

  const AudioSignal x = read_wav(a.in);
  const AudioSignal y = apply_model(model, x, a_opt, alpha);

  json cfg{{"checkpoint", a.checkpoint}, {"input", a.in}, {"mode", mode_name(model.mode)}, {"format", a.format}};
  cfg["alpha"] = alpha ? json(*alpha) : json(nullptr);
  cfg["audiogram_db_hl"] = a_opt ? json(a_opt->thresholds) : json(nullptr);
  const fs::path out_path = output_path(a.out);
  auto manifest = RunManifest::create("process", cfg.dump(), "", 0);
  manifest.outputs = {out_path.string()};
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  write_wav(out_path, y, manifest.to_json_text(), format);
  out << "wrote " << out_path.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- evaluation

struct EvalArgs {
  std::string checkpoint, testset, out = "eval", alphas;
  int export_scenes = 10;
  bool no_export = false;
};

int run_eval(const EvalArgs& a, const CLI::App& sub, bool sweep, std::ostream& out) {
  const TrainedModel model = load_trained_model(a.checkpoint);
  const bool dual = model.config.heads.size() == 2;
  EvalOptions opt;
  if (sweep) {
    if (!dual) throw UsageError("alpha-sweep needs a dual-head (c-nr-hlc) checkpoint");
    opt.alphas = parse_alpha_list(sub.count("--alphas") ? a.alphas : "0:0.2:1");
  } else if (sub.count("--alphas")) {
    if (!dual) throw UsageError("--alphas applies to dual-head (c-nr-hlc) checkpoints only");
    opt.alphas = parse_alpha_list(a.alphas);
  } else if (dual) {
    throw UsageError("this checkpoint has NR and HLC heads; pass --alphas (or use alpha-sweep)");
  }
  if (!fs::is_directory(a.testset)) throw std::runtime_error("test set directory " + a.testset + " does not exist");
  const auto scenes = load_test_set(a.testset);
  if (scenes.empty()) throw std::runtime_error("no scene_* directories in " + a.testset);

  const fs::path out_dir = output_path(a.out);
  const std::string table_name = sweep ? "alpha_sweep.csv" : "eval.csv";
  json cfg{{"checkpoint", a.checkpoint}, {"testset", a.testset}, {"alphas", opt.alphas},
           {"export_scenes", a.no_export ? 0 : a.export_scenes}, {"mode", mode_name(model.mode)}};
  auto manifest = RunManifest::create(sweep ? "alpha-sweep" : "evaluate", cfg.dump(), "", 0);
  manifest.outputs = {(out_dir / table_name).string(), (out_dir / "run_manifest.json").string()};
  if (!a.no_export) manifest.outputs.push_back((out_dir / "export").string());
  const std::string mjson = manifest.to_json_text();

  opt.manifest_json = mjson;
  opt.export_scenes = a.export_scenes;
  if (!a.no_export) opt.export_dir = out_dir / "export";
  const EvalTable table = evaluate_model(model, scenes, opt);

  fs::create_directories(out_dir);
  write_text(out_dir / table_name, "# manifest: " + mjson + "\n" + table.to_csv());
  write_text(out_dir / "run_manifest.json", mjson + "\n");
  out << table.to_csv();
  out << "# input_sdr_db " << fmt17(table.input_sdr) << " over " << scenes.size() << " scenes\n";
  return kExitOk;
}

// ---------------------------------------------------------------- freeze-testset

struct FreezeArgs {
  std::string config, corpus, out = "testset", split;
  int n = 50;
  std::uint64_t seed = 0;
  double scene_seconds = 0.0;
};

int run_freeze(const FreezeArgs& a, const CLI::App& sub, std::ostream& out) {
  RunConfig cfg;
  if (sub.count("--config")) cfg = RunConfig::load(a.config);
  if (!cfg.split_given) cfg.scenes.split = "test";
  if (sub.count("--split")) cfg.scenes.split = a.split;
  if (sub.count("--seed")) cfg.scenes.seed = a.seed;
  if (sub.count("--scene-seconds")) cfg.scenes.scene_seconds = a.scene_seconds;
  if (sub.count("--corpus")) cfg.corpus = a.corpus;
  if (a.n < 1) throw UsageError("--n must be at least 1");
  cfg.scenes.validate();
  const Corpus corpus = open_corpus(cfg.corpus, cfg.synthetic_corpus);

  const fs::path out_dir = output_path(a.out);
  json c{{"scenes", json::parse(cfg.scenes.to_json_text())},
         {"corpus", cfg.corpus},
         {"n", a.n},
         {"synthetic_corpus",
          {{"seed", cfg.synthetic_corpus.seed},
           {"speech_items", cfg.synthetic_corpus.speech_items},
           {"noise_items", cfg.synthetic_corpus.noise_items},
           {"seconds", cfg.synthetic_corpus.seconds}}}};
  auto manifest = RunManifest::create("freeze-testset", c.dump(), corpus.hash(), cfg.scenes.seed);
  manifest.outputs = {out_dir.string()};
  const std::string mjson = manifest.to_json_text();
  freeze_test_set(cfg.scenes, corpus, synthetic_rir_provider(), AudiogramSampler{}, a.n, out_dir, mjson);
  write_text(out_dir / "run_manifest.json", mjson + "\n");
  out << "wrote " << a.n << " scenes to " << out_dir.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- gradcheck

int run_gradcheck(const std::string& scope, int points, std::uint64_t seed, std::ostream& out) {
  std::vector<GradcheckScope> scopes;
  if (scope == "all")
    scopes = {GradcheckScope::Primitive, GradcheckScope::Auditory, GradcheckScope::Processor, GradcheckScope::End2End};
  else
    scopes = {parse_gradcheck_scope(scope)};
  GradcheckSuiteOptions opt;
  opt.points = points;
  opt.seed = seed;
  bool ok = true;
  char line[256];
  std::snprintf(line, sizeof line, "%-10s %-22s %12s %8s %8s %8s  %s\n", "scope", "case", "max_rel_err", "tol",
                "checked", "excluded", "result");
  out << line;
  std::vector<std::string> failures;
  for (auto s : scopes) {
    for (const auto& c : run_gradcheck_suite(s, opt)) {
      std::snprintf(line, sizeof line, "%-10s %-22s %12.3e %8.0e %8zu %8zu  %s\n", scope_name(s).c_str(),
                    c.name.c_str(), c.report.max_rel_error, c.tolerance, c.report.checked, c.report.excluded,
                    c.passed() ? "PASS" : "FAIL");
      out << line;
      if (!c.passed()) {
        ok = false;
        failures.push_back(scope_name(s) + "/" + c.name + ": worst index " + std::to_string(c.report.worst) +
                           " analytic " + fmt17(c.report.worst_analytic) + " numeric " +
                           fmt17(c.report.worst_numeric));
      }
    }
  }
  for (const auto& f : failures) out << "FAIL " << f << "\n";
  return ok ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------- audiogram tools

std::string audiogram_json_with_manifest(const Audiogram& a, const std::string& manifest) {
  json j = json::parse(a.to_json_text());
  j["manifest"] = json::parse(manifest);
  return j.dump(2) + "\n";
}

int run_audiogram_show(const std::string& spec, const std::string& out_file, std::ostream& out) {
  const Audiogram a = resolve_audiogram(spec);
  const auto model = AuditoryModel::standard();
  const auto hl = model->hearing_loss(a);
  json j = json::parse(a.to_json_text());
  j["normal"] = a.is_normal();
  json ch = json::array();
  const auto& cf = model->center_frequencies();
  for (std::size_t i = 0; i < cf.size(); ++i)
    ch.push_back({{"cf_hz", cf[i]},
                  {"hl_total", hl.hl_total[i]},
                  {"hl_ohc_max", hl.hl_ohc_max[i]},
                  {"hl_ohc", hl.hl_ohc[i]},
                  {"hl_ihc", hl.hl_ihc[i]}});
  j["channels"] = ch;
  out << j.dump(2) << "\n";
  if (!out_file.empty()) {
    const fs::path p = output_path(out_file);
    auto m = RunManifest::create("audiogram show", json{{"audiogram", spec}}.dump(), "", 0);
    m.outputs = {p.string()};
    write_text(p, audiogram_json_with_manifest(a, m.to_json_text()));
  }
  return kExitOk;
}

int run_audiogram_sample(int n, std::uint64_t seed, double jitter, std::ostream& out) {
  if (n < 1) throw UsageError("--n must be at least 1");
  AudiogramSampler sampler;
  sampler.jitter_db = jitter;
  PortableRng rng(seed);
  for (int i = 0; i < n; ++i) {
    const auto s = sampler.sample(rng);
    out << json{{"profile", s.name}, {"thresholds_db_hl", s.audiogram.thresholds}}.dump() << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------- auditory-model tables

int run_drnl_table(const std::string& out_file, std::ostream& out) {
  const auto params = DrnlParams::literature(auditory_center_frequencies());
  const std::string csv = params.to_csv();
  if (out_file.empty()) {
    out << csv;
  } else {
    const fs::path p = output_path(out_file);
    auto m = RunManifest::create("drnl-table", "{}", "", 0);
    m.outputs = {p.string()};
    write_text(p, "# manifest: " + m.to_json_text() + "\n" + csv);
    out << "wrote " << p.string() << "\n";
  }
  return kExitOk;
}

int run_calibrate(const std::string& out_file, std::ostream& out) {
  AuditoryModelOptions o;
  const AuditoryModel model(DrnlParams::literature(auditory_center_frequencies()), o);
  const auto cal = calibrate_compression(model);
  const bool same = std::abs(cal.constants.gain - kDefaultCompression.gain) <= 1e-9 * kDefaultCompression.gain &&
                    std::abs(cal.constants.threshold - kDefaultCompression.threshold) <=
                        1e-9 * kDefaultCompression.threshold;
  json j{{"gain", cal.constants.gain},
         {"threshold", cal.constants.threshold},
         {"channel", cal.channel},
         {"channel_cf_hz", model.center_frequencies()[static_cast<std::size_t>(cal.channel)]},
         {"floor_scale", cal.floor_scale},
         {"ihc_low", cal.ihc_low},
         {"ihc_high", cal.ihc_high},
         {"target_low", cal.target_low},
         {"target_high", cal.target_high},
         {"matches_built_in", same}};
  out << "gain      " << fmt17(cal.constants.gain) << "\nthreshold " << fmt17(cal.constants.threshold)
      << "\nmatches built-in constants: " << (same ? "yes" : "no") << "\n";
  if (!out_file.empty()) {
    const fs::path p = output_path(out_file);
    auto m = RunManifest::create("calibrate-compression", "{}", "", 0);
    m.outputs = {p.string()};
    j["manifest"] = json::parse(m.to_json_text());
    write_text(p, j.dump(2) + "\n");
  }
  return kExitOk;
}

// ---------------------------------------------------------------- synth-corpus

int run_synth_corpus(const std::string& out_dir_arg, const SyntheticCorpusSpec& spec, std::ostream& out) {
  if (spec.speech_items < 1 || spec.noise_items < 1) throw UsageError("--speech and --noise must be at least 1");
  const Corpus c = Corpus::synthetic(spec.seed, spec.speech_items, spec.noise_items, spec.seconds);
  const fs::path dir = output_path(out_dir_arg);
  json cfg{{"seed", spec.seed}, {"speech_items", spec.speech_items}, {"noise_items", spec.noise_items},
           {"seconds", spec.seconds}};
  auto m = RunManifest::create("synth-corpus", cfg.dump(), c.hash(), spec.seed);
  m.outputs = {dir.string()};
  const std::string mjson = m.to_json_text();
  c.save(dir, mjson);
  write_text(dir / "run_manifest.json", mjson + "\n");
  out << "wrote " << c.entries().size() << " items to " << dir.string() << "\n";
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Noise reduction and hearing-loss compensation toolkit", "jnrhlc"};
  app.require_subcommand(1);
  app.set_version_flag("--version", code_version());
  std::function<int()> action;

  // train
  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train a speech processor");
  train->add_option("--config", ta.config, "JSON run configuration")->check(CLI::ExistingFile);
  train->add_option("--corpus", ta.corpus, "Corpus directory, or 'synthetic'");
  train->add_option("--out", ta.out, "Output directory (relative to $JNRHLC_OUTPUT_DIR)")->capture_default_str();
  train->add_option("--mode", ta.mode, "sdr | nr | hlc | nr-hlc | c-nr-hlc")
      ->check(CLI::IsMember({"sdr", "nr", "hlc", "nr-hlc", "c-nr-hlc"}, CLI::ignore_case));
  train->add_option("--loss", ta.loss, "mse | mae (auditory modes only)")
      ->check(CLI::IsMember({"mse", "mae"}, CLI::ignore_case));
  train->add_option("--preset", ta.preset, "Processor size: tiny | desk | full")
      ->check(CLI::IsMember({"tiny", "desk", "full"}));
  train->add_option("--channels", ta.channels, "Feature channels N");
  train->add_option("--layers", ta.layers, "Dual-path layers L");
  train->add_option("--batch-size", ta.batch_size, "Scenes per step");
  train->add_option("--scenes", ta.scenes, "Total training scenes");
  train->add_option("--lr", ta.lr, "Initial learning rate");
  train->add_option("--seed", ta.seed, "Seed for initialisation and the scene stream");
  train->add_option("--scene-seconds", ta.scene_seconds, "Scene length in seconds");
  train->add_option("--checkpoint-every", ta.checkpoint_every, "Also save every this many scenes");
  train->add_option("--resume", ta.resume, "Continue from a checkpoint")->check(CLI::ExistingFile);
  train->add_option("--print-every", ta.print_every, "Echo every n-th log row (0: quiet)")->capture_default_str();
  train->callback([&] { action = [&] { return run_train(ta, *train, out); }; });

  // process
  ProcessArgs pa;
  auto* process = app.add_subcommand("process", "Process a WAV file with a trained model");
  process->add_option("--checkpoint", pa.checkpoint, "Trained checkpoint")->required()->check(CLI::ExistingFile);
  process->add_option("--in", pa.in, "Input WAV (mono, 16 kHz)")->required()->check(CLI::ExistingFile);
  process->add_option("--out", pa.out, "Output WAV")->required();
  process->add_option("--audiogram", pa.audiogram, "Ten comma-separated thresholds, a JSON file, or a profile name");
  process->add_option("--alpha", pa.alpha, "NR/HLC mix for dual-head models (1: NR, 0: HLC)");
  process->add_option("--format", pa.format, "Output sample format: f32 | f64")
      ->capture_default_str()
      ->check(CLI::IsMember({"f32", "f64"}));
  process->callback([&] { action = [&] { return run_process(pa, *process, out); }; });

  // evaluate / alpha-sweep
  EvalArgs ea, sa;
  auto add_eval = [&](CLI::App* sub, EvalArgs& a, const char* alpha_help) {
    sub->add_option("--checkpoint", a.checkpoint, "Trained checkpoint")->required()->check(CLI::ExistingFile);
    sub->add_option("--testset", a.testset, "Frozen test set directory")->required();
    sub->add_option("--out", a.out, "Output directory")->capture_default_str();
    sub->add_option("--alphas", a.alphas, alpha_help);
    sub->add_option("--export-scenes", a.export_scenes, "Scenes exported as WAV pairs (negative: all)")
        ->capture_default_str();
    sub->add_flag("--no-export", a.no_export, "Skip the WAV export");
  };
  auto* evaluate = app.add_subcommand("evaluate", "SDR table over a frozen test set and the standard audiograms");
  add_eval(evaluate, ea, "Alphas for dual-head models, e.g. 0,0.5,1 or 0:0.25:1");
  evaluate->callback([&] { action = [&] { return run_eval(ea, *evaluate, false, out); }; });
  auto* sweep = app.add_subcommand("alpha-sweep", "Evaluate a dual-head model over a list of alphas");
  add_eval(sweep, sa, "Alphas (default 0:0.2:1)");
  sweep->callback([&] { action = [&] { return run_eval(sa, *sweep, true, out); }; });

  // freeze-testset
  FreezeArgs fa;
  auto* freeze = app.add_subcommand("freeze-testset", "Render a fixed set of test scenes");
  freeze->add_option("--config", fa.config, "JSON run configuration (scenes, corpus sections)")
      ->check(CLI::ExistingFile);
  freeze->add_option("--corpus", fa.corpus, "Corpus directory, or 'synthetic'");
  freeze->add_option("--n", fa.n, "Number of scenes")->capture_default_str();
  freeze->add_option("--out", fa.out, "Output directory")->capture_default_str();
  freeze->add_option("--seed", fa.seed, "Scene stream seed");
  freeze->add_option("--split", fa.split, "Corpus split (default test)");
  freeze->add_option("--scene-seconds", fa.scene_seconds, "Scene length in seconds");
  freeze->callback([&] { action = [&] { return run_freeze(fa, *freeze, out); }; });

  // gradcheck
  std::string gc_scope = "all";
  int gc_points = 3;
  std::uint64_t gc_seed = 1;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  gradcheck->add_option("--scope", gc_scope, "primitive | auditory | processor | end2end | all")
      ->capture_default_str()
      ->check(CLI::IsMember({"primitive", "auditory", "processor", "end2end", "all"}));
  gradcheck->add_option("--points", gc_points, "Random points per primitive")->capture_default_str();
  gradcheck->add_option("--seed", gc_seed, "Seed for points and directions")->capture_default_str();
  gradcheck->callback([&] { action = [&] { return run_gradcheck(gc_scope, gc_points, gc_seed, out); }; });

  // audiogram
  auto* audiogram = app.add_subcommand("audiogram", "Audiogram tools");
  audiogram->require_subcommand(1);
  auto* ag_list = audiogram->add_subcommand("list", "Standard audiogram profiles");
  ag_list->callback([&] {
    action = [&] {
      for (const auto& p : standard_audiograms()) {
        out << p.name;
        for (double t : p.audiogram.thresholds) out << ' ' << t;
        out << "\n";
      }
      return kExitOk;
    };
  });
  std::string ag_spec, ag_out;
  auto* ag_show = audiogram->add_subcommand("show", "Thresholds and the per-channel OHC/IHC split");
  ag_show->add_option("audiogram", ag_spec, "Threshold list, JSON file, or profile name")->required();
  ag_show->add_option("--out", ag_out, "Also write the audiogram JSON here");
  ag_show->callback([&] { action = [&] { return run_audiogram_show(ag_spec, ag_out, out); }; });
  int ag_n = 10;
  std::uint64_t ag_seed = 0;
  double ag_jitter = 10.0;
  auto* ag_sample = audiogram->add_subcommand("sample", "Draw training audiograms (one JSON object per line)");
  ag_sample->add_option("--n", ag_n, "Number of draws")->capture_default_str();
  ag_sample->add_option("--seed", ag_seed, "Seed")->capture_default_str();
  ag_sample->add_option("--jitter", ag_jitter, "Uniform jitter half-width in dB")->capture_default_str();
  ag_sample->callback([&] { action = [&] { return run_audiogram_sample(ag_n, ag_seed, ag_jitter, out); }; });

  // synth-corpus
  SyntheticCorpusSpec sc;
  std::string sc_out;
  auto* synth = app.add_subcommand("synth-corpus", "Write the built-in synthetic corpus to disk");
  synth->add_option("--out", sc_out, "Output directory")->required();
  synth->add_option("--seed", sc.seed, "Seed")->capture_default_str();
  synth->add_option("--speech", sc.speech_items, "Speech items")->capture_default_str();
  synth->add_option("--noise", sc.noise_items, "Noise items")->capture_default_str();
  synth->add_option("--seconds", sc.seconds, "Item length in seconds")->capture_default_str();
  synth->callback([&] { action = [&] { return run_synth_corpus(sc_out, sc, out); }; });

  // auditory-model tables
  std::string dt_out, cc_out;
  auto* drnl = app.add_subcommand("drnl-table", "Print the DRNL parameter table built from the literature fits");
  drnl->add_option("--out", dt_out, "Write the CSV here instead of stdout");
  drnl->callback([&] { action = [&] { return run_drnl_table(dt_out, out); }; });
  auto* calib = app.add_subcommand("calibrate-compression",
                                   "Refit the log-compression constants against the adaptation-loop oracle");
  calib->add_option("--out", cc_out, "Also write the fit as JSON here");
  calib->callback([&] { action = [&] { return run_calibrate(cc_out, out); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "jnrhlc: " << e.what() << "\nRun with --help for usage.\n";
    return kExitUsage;
  }

  try {
    return action ? action() : kExitUsage;
  } catch (const UsageError& e) {
    err << "jnrhlc: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "jnrhlc: invalid input: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "jnrhlc: error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace jnrhlc::cli
