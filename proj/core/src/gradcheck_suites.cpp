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

#include "jnrhlc/gradcheck_suites.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>

#include "jnrhlc/ad/lstm.hpp"
#include "jnrhlc/ad/ops.hpp"
#include "jnrhlc/ad/params.hpp"
#include "jnrhlc/auditory_model.hpp"
#include "jnrhlc/objectives.hpp"
#include "jnrhlc/processor.hpp"
#include "jnrhlc/random.hpp"
#include "jnrhlc/scene.hpp"

namespace jnrhlc {

using namespace ad;

std::string scope_name(GradcheckScope s) {
  switch (s) {
    case GradcheckScope::Primitive: return "primitive";
    case GradcheckScope::Auditory: return "auditory";
    case GradcheckScope::Processor: return "processor";
    case GradcheckScope::End2End: return "end2end";
  }
  return "?";
}

GradcheckScope parse_gradcheck_scope(const std::string& s) {
  std::string t = s;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (auto g : {GradcheckScope::Primitive, GradcheckScope::Auditory, GradcheckScope::Processor, GradcheckScope::End2End})
    if (t == scope_name(g)) return g;
  throw std::invalid_argument("unknown gradcheck scope '" + s + "' (primitive|auditory|processor|end2end)");
}

namespace {

std::vector<double> uniform(std::uint64_t seed, std::size_t n, double lo = -1.0, double hi = 1.0) {
  PortableRng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

// Reduces any tensor to a scalar with fixed pseudo-random weights, so every
// output element gets a distinct cotangent.
Tensor weighted_sum(const Tensor& y) {
  const auto w = uniform(999, y.size(), 0.5, 1.5);
  return sum(mul(y, y.tape().constant(y.shape(), w)));
}

struct PrimitiveCase {
  std::string name;
  std::size_t size;
  double lo, hi;
  std::function<Tensor(const Tensor&)> body;
};

std::vector<PrimitiveCase> primitive_cases() {
  auto two = [](const Tensor& x, Shape sa, Shape sb) {
    const int na = static_cast<int>(numel(sa));
    const int nb = static_cast<int>(numel(sb));
    return std::pair{reshape(slice(x, 0, 0, na), sa), reshape(slice(x, 0, na, nb), sb)};
  };
  auto bank_long = std::make_shared<const FirBank>(std::vector<std::vector<double>>{
      uniform(1, 100), uniform(2, 100), uniform(3, 100)});
  auto bank_short = std::make_shared<const FirBank>(std::vector<std::vector<double>>{uniform(4, 10), uniform(5, 10)});
  const StftConfig cfg;
  return {
      {"add", 16, -1, 1, [=](const Tensor& x) { auto [a, b] = two(x, {3, 4}, {4}); return add(a, b); }},
      {"add_rev", 16, -1, 1, [=](const Tensor& x) { auto [a, b] = two(x, {4}, {3, 4}); return add(a, b); }},
      {"sub", 15, -1, 1, [=](const Tensor& x) { auto [a, b] = two(x, {3, 4}, {3, 1}); return sub(a, b); }},
      {"mul", 24, -1, 1, [=](const Tensor& x) { auto [a, b] = two(x, {3, 4}, {3, 4}); return mul(a, b); }},
      {"mul_bcast", 30, -1, 1, [=](const Tensor& x) { auto [a, b] = two(x, {2, 3, 4}, {3, 2}); return mul(slice(a, 2, 0, 2), b); }},
      {"minimum", 24, -1, 1, [=](const Tensor& x) { auto [a, b] = two(x, {3, 4}, {3, 4}); return minimum(a, b); }},
      {"neg", 7, -1, 1, [](const Tensor& x) { return neg(x); }},
      {"scale", 7, -1, 1, [](const Tensor& x) { return scale(x, -2.5); }},
      {"add_scalar", 7, -1, 1, [](const Tensor& x) { return add_scalar(x, 0.3); }},
      {"matmul", 32, -1, 1, [=](const Tensor& x) { auto [a, b] = two(x, {3, 4}, {4, 5}); return matmul(a, b); }},
      {"matmul_batched", 44, -1, 1, [=](const Tensor& x) { auto [a, b] = two(x, {2, 3, 4}, {4, 5}); return matmul(a, b); }},
      {"relu", 20, -1, 1, [](const Tensor& x) { return relu(x); }},
      {"tanh", 20, -2, 2, [](const Tensor& x) { return tanh(x); }},
      {"sigmoid", 20, -4, 4, [](const Tensor& x) { return sigmoid(x); }},
      {"exp", 20, -2, 2, [](const Tensor& x) { return exp(x); }},
      {"log", 20, 0.2, 3, [](const Tensor& x) { return log(x); }},
      {"abs", 20, -1, 1, [](const Tensor& x) { return abs(x); }},
      {"square", 20, -1, 1, [](const Tensor& x) { return square(x); }},
      // Kept away from the singular derivative at 0.
      {"pow_abs", 20, 0.1, 1, [](const Tensor& x) { return pow_abs(x, 0.25); }},
      {"pow_abs_neg", 20, -1, -0.1, [](const Tensor& x) { return pow_abs(x, 0.6); }},
      {"sum", 9, -1, 1, [](const Tensor& x) { return sum(x); }},
      {"mean", 9, -1, 1, [](const Tensor& x) { return mean(x); }},
      {"reshape", 12, -1, 1, [](const Tensor& x) { return reshape(x, {3, 2, 2}); }},
      {"permute", 24, -1, 1, [](const Tensor& x) { return permute(reshape(x, {2, 3, 4}), {2, 0, 1}); }},
      {"slice", 24, -1, 1, [](const Tensor& x) { return slice(reshape(x, {2, 3, 4}), 1, 1, 2); }},
      {"concat", 24, -1, 1,
       [](const Tensor& x) {
         const Tensor a = reshape(x, {2, 3, 4});
         return concat({slice(a, 2, 2, 2), a, slice(a, 2, 0, 1)}, 2);
       }},
      {"layer_norm", 18, -1, 1, [](const Tensor& x) { return layer_norm(reshape(x, {3, 6})); }},
      {"broken_stick", 100, -1, 1,
       [](const Tensor& x) {
         const std::vector<double> a{2.0, 5.0}, b{1.0, 0.5}, c{0.25, 0.25};
         return broken_stick(reshape(x, {2, 50}), a, b, c);
       }},
      {"fir_shared_fft", 200, -1, 1, [=](const Tensor& x) { return fir_shared(x, bank_long, 3); }},
      {"fir_shared_direct", 200, -1, 1, [=](const Tensor& x) { return fir_shared(x, bank_short, 2); }},
      {"fir_rows_fft", 300, -1, 1, [=](const Tensor& x) { return fir_rows(reshape(x, {3, 100}), bank_long); }},
      {"fir_rows_direct", 200, -1, 1, [=](const Tensor& x) { return fir_rows(reshape(x, {2, 100}), bank_short); }},
      {"stft", 1100, -1, 1, [=](const Tensor& x) { return stft(x, cfg); }},
      {"istft", 2 * 4 * 257, -1, 1, [=](const Tensor& x) { return istft(reshape(x, {2, 4, 257}), cfg, 1200); }},
      // Input [5, 2, 3] followed by the weights for I = 3, H = 2.
      {"lstm", 30 + 24 + 16 + 8, -1, 1,
       [](const Tensor& x) {
         const Tensor in = reshape(slice(x, 0, 0, 30), {5, 2, 3});
         const LstmWeights w{reshape(slice(x, 0, 30, 24), {3, 8}), reshape(slice(x, 0, 54, 16), {2, 8}),
                             slice(x, 0, 70, 8)};
         return add(lstm_sequence(in, w, false), lstm_sequence(in, w, true));
       }},
  };
}

void merge(GradCheckReport& into, const GradCheckReport& r) {
  if (r.checked > 0 && (into.checked == 0 || r.max_rel_error >= into.max_rel_error)) {
    into.max_rel_error = r.max_rel_error;
    into.worst = r.worst;
    into.worst_analytic = r.worst_analytic;
    into.worst_numeric = r.worst_numeric;
  }
  into.checked += r.checked;
  into.excluded += r.excluded;
}

GradCheckOptions base_options(std::uint64_t seed) {
  GradCheckOptions opt;
  opt.seed = seed;
  // The auditory model rectifies every sample, so kinks are dense along any
  // direction; a wrong gradient is off at all three steps.
  opt.step_scales = {1.0, 0.1, 0.01};
  return opt;
}

std::vector<GradcheckCase> primitive_suite(const GradcheckSuiteOptions& o) {
  std::vector<GradcheckCase> out;
  for (const auto& pc : primitive_cases()) {
    GradcheckCase c{pc.name, {}, 1e-4};
    for (int point = 0; point < o.points; ++point) {
      const std::uint64_t s = o.seed * 7919 + static_cast<std::uint64_t>(point);
      const auto x = uniform(1000 * s + pc.size, pc.size, pc.lo, pc.hi);
      merge(c.report, gradient_check([&](Tape&, const Tensor& t) { return weighted_sum(pc.body(t)); },
                                     {static_cast<int>(pc.size)}, x, base_options(s + 1)));
    }
    out.push_back(std::move(c));
  }
  return out;
}

// A short scene from the built-in corpus.
Scene small_scene(double seconds, std::uint64_t seed) {
  static const Corpus corpus = Corpus::synthetic(17, 2, 2, 1.0);
  SceneConfig sc;
  sc.scene_seconds = seconds;
  sc.seed = seed;
  sc.t60_min = 0.1;
  sc.t60_max = 0.2;
  return generate_scene(sc, corpus, synthetic_rir_provider(), AudiogramSampler{}, 0);
}

std::vector<GradcheckCase> auditory_suite(const GradcheckSuiteOptions& o) {
  const auto model = AuditoryModel::standard();
  const Scene s = small_scene(0.1, o.seed);
  const int n = static_cast<int>(s.x.size());
  const Shape shape{n};
  const auto& x = s.x.samples;
  const Audiogram& n4 = standard_audiogram("N4");
  const auto hl = model->hearing_loss(n4);
  const auto gains = model->ohc_gains(hl.hl_ohc);
  auto opt = base_options(o.seed);
  auto on = [&](Tape& tape, const std::vector<double>& v) { return tape.constant(shape, v); };

  std::vector<GradcheckCase> out;
  auto add_case = [&](std::string name, double tol, const ScalarFn& f) {
    out.push_back({std::move(name), gradient_check(f, shape, x, opt), tol});
  };
  add_case("middle_ear", 1e-4, [&](Tape&, const Tensor& t) { return weighted_sum(model->middle_ear(t)); });
  add_case("filterbank_hi", 1e-4, [&](Tape&, const Tensor& t) { return weighted_sum(model->filterbank(t, gains)); });
  add_case("ihc", 1e-4, [&](Tape&, const Tensor& t) {
    return weighted_sum(model->ihc_transduction(model->filterbank(t, gains)));
  });
  add_case("log_compression", 1e-4, [&](Tape&, const Tensor& t) {
    return weighted_sum(model->log_compression(model->ihc_transduction(model->filterbank(t, gains)), hl.hl_ihc));
  });
  add_case("loss_nr_mse", 1e-4, [&](Tape& tape, const Tensor& t) {
    return loss_nr(*model, t, on(tape, s.y.samples), LossKind::MSE);
  });
  add_case("loss_hlc_mae", 1e-3, [&](Tape& tape, const Tensor& t) {
    // A fixed impaired profile keeps the probe point off the MAE kink at
    // zero difference (a sampled NH audiogram would sit right on it).
    return loss_hlc(*model, t, on(tape, x), n4, LossKind::MAE);
  });
  add_case("loss_joint_mae", 1e-3, [&](Tape& tape, const Tensor& t) {
    return loss_joint(*model, t, on(tape, s.y.samples), s.a, LossKind::MAE);
  });
  return out;
}

ProcessorConfig tiny_config(std::vector<Head> heads, bool conditioning) {
  ProcessorConfig c;
  c.bands.edges_hz = {0.0, 1000.0, 4000.0, 8000.0};
  c.channels = 4;
  c.layers = 1;
  c.heads = std::move(heads);
  c.audiogram_conditioning = conditioning;
  return c;
}

// Initialised parameters nudged off the identity so every path carries signal.
ParamSet perturbed_params(const ProcessorConfig& cfg, std::uint64_t seed) {
  auto p = init_processor_params(cfg, seed);
  PortableRng rng(seed + 1);
  for (const auto& name : p.names())
    for (double& v : p.at(name).values) v += 0.05 * rng.normal();
  return p;
}

// Parameter-gradient check of `loss(outputs, tape)` over the processor.
GradCheckReport param_check(const SpeechProcessor& proc, const ParamSet& p, const AudioSignal& x,
                            const std::optional<Audiogram>& a,
                            const std::function<Tensor(const ProcessorOutputs&, Tape&)>& loss,
                            const GradCheckOptions& opt) {
  const FlatObjective f = [&](std::span<const double> theta, std::vector<double>* grad) {
    auto q = p;
    q.unflatten(std::vector<double>(theta.begin(), theta.end()));
    Tape tape;
    const BoundParams bp(tape, q, grad != nullptr);
    const auto out = proc.forward(bp, tape.constant({static_cast<int>(x.size())}, x.samples), a);
    const auto l = loss(out, tape);
    if (grad) *grad = bp.flat_gradient(tape.backward(l));
    return l.item();
  };
  return directional_check(f, p.flatten(), opt);
}

std::vector<GradcheckCase> processor_suite(const GradcheckSuiteOptions& o) {
  const auto cfg = tiny_config({Head::NR, Head::HLC}, true);
  const SpeechProcessor proc(cfg);
  const auto p = perturbed_params(cfg, o.seed);
  const Scene s = small_scene(0.1, o.seed);
  const int n = static_cast<int>(s.x.size());
  auto opt = base_options(o.seed);
  opt.directions = 8;

  std::vector<GradcheckCase> out;
  out.push_back({"input", gradient_check(
                              [&](Tape& tape, const Tensor& t) {
                                const BoundParams bp(tape, p, false);
                                const auto r = proc.forward(bp, t, s.a);
                                return add(weighted_sum(*r.nr), weighted_sum(*r.hlc));
                              },
                              {n}, s.x.samples, opt),
                 1e-4});
  out.push_back({"params", param_check(
                               proc, p, s.x, s.a,
                               [&](const ProcessorOutputs& r, Tape& tape) {
                                 const auto y = tape.constant({n}, s.y.samples);
                                 return add(sum(square(sub(*r.nr, y))), weighted_sum(*r.hlc));
                               },
                               opt),
                 1e-4});
  return out;
}

std::vector<GradcheckCase> end2end_suite(const GradcheckSuiteOptions& o) {
  const auto model = AuditoryModel::standard();
  const Scene s = small_scene(0.2, o.seed);
  const int n = static_cast<int>(s.x.size());
  auto opt = base_options(o.seed);
  opt.directions = 6;
  std::vector<GradcheckCase> out;

  {
    const auto cfg = tiny_config({Head::NR}, false);
    const SpeechProcessor proc(cfg);
    const auto p = perturbed_params(cfg, o.seed);
    out.push_back({"nr_mae_params", param_check(
                                        proc, p, s.x, std::nullopt,
                                        [&](const ProcessorOutputs& r, Tape& tape) {
                                          return loss_nr(*model, *r.nr, tape.constant({n}, s.y.samples), LossKind::MAE);
                                        },
                                        opt),
                   1e-3});
  }
  {
    const auto cfg = tiny_config({Head::NR, Head::HLC}, true);
    const SpeechProcessor proc(cfg);
    const auto p = perturbed_params(cfg, o.seed + 1);
    auto both = [&](const ProcessorOutputs& r, Tape& tape) {
      const auto l_nr = loss_nr(*model, *r.nr, tape.constant({n}, s.y.samples), LossKind::MAE);
      const auto l_hlc = loss_hlc(*model, *r.hlc, tape.constant({n}, s.x.samples), s.a, LossKind::MAE);
      return loss_controllable(l_nr, l_hlc, tape.scalar(0.2), tape.scalar(-0.1));
    };
    out.push_back({"c_nr_hlc_mae_params", param_check(proc, p, s.x, s.a, both, opt), 1e-3});
    out.push_back({"c_nr_hlc_mae_input", gradient_check(
                                             [&](Tape& tape, const Tensor& t) {
                                               const BoundParams bp(tape, p, false);
                                               return both(proc.forward(bp, t, s.a), tape);
                                             },
                                             {n}, s.x.samples, opt),
                   1e-3});
  }
  return out;
}

}  // namespace

std::vector<std::string> gradcheck_primitive_names() {
  std::vector<std::string> names;
  for (const auto& c : primitive_cases()) names.push_back(c.name);
  return names;
}

std::vector<GradcheckCase> run_gradcheck_suite(GradcheckScope scope, const GradcheckSuiteOptions& options) {
  if (options.points < 1) throw std::invalid_argument("gradcheck: points must be at least 1");
  switch (scope) {
    case GradcheckScope::Primitive: return primitive_suite(options);
    case GradcheckScope::Auditory: return auditory_suite(options);
    case GradcheckScope::Processor: return processor_suite(options);
    case GradcheckScope::End2End: return end2end_suite(options);
  }
  return {};
}

}  // namespace jnrhlc
