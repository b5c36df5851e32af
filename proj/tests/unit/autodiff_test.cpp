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
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "jnrhlc/ad/archive.hpp"
#include "jnrhlc/ad/gradcheck.hpp"
#include "jnrhlc/ad/lstm.hpp"
#include "jnrhlc/ad/ops.hpp"
#include "jnrhlc/ad/params.hpp"
#include "jnrhlc/gradcheck_suites.hpp"
#include "jnrhlc/random.hpp"

namespace jnrhlc::ad {
namespace {

std::vector<double> uniform(std::uint64_t seed, std::size_t n, double lo = -1.0, double hi = 1.0) {
  PortableRng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

// Reduces any tensor to a scalar with fixed pseudo-random weights, so every
// output element contributes a distinct cotangent.
Tensor weighted_sum(const Tensor& y) {
  const auto w = uniform(999, y.size(), 0.5, 1.5);
  return sum(mul(y, y.tape().constant(y.shape(), w)));
}

TEST(Primitives, GradientsMatchFiniteDifferences) {
  GradcheckSuiteOptions opt;
  opt.points = 10;
  const auto cases = run_gradcheck_suite(GradcheckScope::Primitive, opt);
  EXPECT_EQ(cases.size(), gradcheck_primitive_names().size());
  for (const auto& c : cases) {
    EXPECT_TRUE(c.passed()) << c.name << " rel err " << c.report.max_rel_error << " worst " << c.report.worst
                            << " analytic " << c.report.worst_analytic << " numeric " << c.report.worst_numeric;
    EXPECT_EQ(c.tolerance, 1e-4);
  }
}

TEST(Primitives, AddValues) {
  Tape t;
  const Tensor y = add(t.constant({2}, {1, 2}), t.constant({2}, {3, 4}));
  EXPECT_EQ(std::vector<double>(y.values().begin(), y.values().end()), (std::vector<double>{4, 6}));
}

TEST(Primitives, TanhDerivativeAtZero) {
  Tape t;
  const Tensor x = t.scalar(0.0, true);
  EXPECT_EQ(t.backward(tanh(x)).at(x)[0], 1.0);
}

TEST(Primitives, ShapeMismatchNamesBothShapes) {
  Tape t;
  try {
    add(t.zeros({3, 4}), t.zeros({5}));
    FAIL();
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[3, 4]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[5]"), std::string::npos) << msg;
  }
  EXPECT_THROW(matmul(t.zeros({2, 3}), t.zeros({2, 3})), std::invalid_argument);
  EXPECT_THROW(concat({t.zeros({2, 3}), t.zeros({3, 3})}, 1), std::invalid_argument);
  EXPECT_THROW(slice(t.zeros({2, 3}), 1, 2, 2), std::invalid_argument);
  EXPECT_THROW(reshape(t.zeros({2, 3}), {4}), std::invalid_argument);
}

TEST(Primitives, BrokenStickMatchesComposite) {
  const std::vector<double> a{3.0, 0.7, 10.0}, b{1.2, 0.9, 0.4}, c{0.25, 0.3, 0.2};
  const auto xv = uniform(17, 3 * 40, -2.0, 2.0);
  Tape t;
  const Tensor x = t.leaf({3, 40}, xv);
  const Tensor fused = broken_stick(x, a, b, c);
  // sign(x) * min(a|x|, b|x|^c), built from primitives row by row.
  std::vector<Tensor> rows;
  for (int r = 0; r < 3; ++r) {
    const Tensor xr = slice(x, 0, r, 1);
    const Tensor lin = scale(abs(xr), a[r]);
    const Tensor cmp = scale(pow_abs(xr, c[r]), b[r]);
    rows.push_back(mul(sign(xr), minimum(lin, cmp)));
  }
  const Tensor comp = concat(rows, 0);
  for (std::size_t i = 0; i < xv.size(); ++i) EXPECT_NEAR(fused.values()[i], comp.values()[i], 1e-14);
  const auto gf = t.backward(weighted_sum(fused)).at(x);
  const auto gc = t.backward(weighted_sum(comp)).at(x);
  for (std::size_t i = 0; i < xv.size(); ++i) EXPECT_NEAR(gf[i], gc[i], 1e-12 * (1.0 + std::abs(gc[i])));
}

TEST(Primitives, StftOpMatchesSignalStft) {
  const auto xv = uniform(3, 3000);
  Tape t;
  const Tensor spec = stft(t.constant({3000}, xv), StftConfig{});
  const auto ref = jnrhlc::stft(AudioSignal(xv));
  ASSERT_EQ(spec.shape(), (Shape{2, ref.frames(), 257}));
  const std::size_t plane = static_cast<std::size_t>(ref.frames()) * 257;
  for (int f = 0; f < ref.frames(); ++f)
    for (int k = 0; k < 257; ++k) {
      EXPECT_EQ(spec.values()[f * 257 + k], ref.at(k, f).real());
      EXPECT_EQ(spec.values()[plane + f * 257 + k], ref.at(k, f).imag());
    }
  const Tensor back = istft(spec, StftConfig{}, 3000);
  const auto ref_back = jnrhlc::istft(ref).samples;
  for (int i = 0; i < 3000; ++i) EXPECT_EQ(back.values()[i], ref_back[i]);
}

TEST(Backward, SumGivesOnes) {
  Tape t;
  const Tensor th = t.leaf({2, 3}, uniform(1, 6));
  const auto g = t.backward(sum(th)).at(th);
  for (double v : g) EXPECT_EQ(v, 1.0);
}

TEST(Backward, HalfSumOfSquaresGivesTheta) {
  Tape t;
  const auto v = uniform(2, 6);
  const Tensor th = t.leaf({6}, v);
  const auto g = t.backward(scale(sum(square(th)), 0.5)).at(th);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_DOUBLE_EQ(g[i], v[i]);
}

TEST(Backward, NonScalarLossRejected) {
  Tape t;
  const Tensor th = t.leaf({3}, {1, 2, 3});
  EXPECT_THROW(t.backward(scale(th, 2.0)), std::invalid_argument);
}

TEST(Backward, NonFiniteLossRejected) {
  Tape t;
  const Tensor th = t.leaf({1}, {-1.0});
  EXPECT_THROW(t.backward(sum(log(th))), std::runtime_error);
}

TEST(Backward, NoGradientLeaks) {
  Tape t;
  const Tensor a = t.leaf({3}, {1, 2, 3}, true);
  const Tensor b = t.leaf({3}, {4, 5, 6}, false);
  const Tensor unused = t.leaf({2}, {1, 1}, true);
  const auto g = t.backward(sum(mul(a, b)));
  EXPECT_TRUE(g.contains(a));
  EXPECT_FALSE(g.contains(b));
  EXPECT_TRUE(g.contains(unused));
  for (double v : g.at(unused)) EXPECT_EQ(v, 0.0);
  for (const auto& [id, grad] : g.entries()) EXPECT_TRUE(t.requires_grad(id));
  // Ops on constants only are never recorded.
  const auto before = t.num_records();
  mul(b, b);
  EXPECT_EQ(t.num_records(), before);
}

TEST(Backward, GradientShapesMatchValues) {
  Tape t;
  const Tensor a = t.leaf({2, 3}, uniform(5, 6));
  const Tensor w = t.leaf({3, 4}, uniform(6, 12));
  const auto g = t.backward(sum(tanh(matmul(a, w))));
  EXPECT_EQ(g.at(a).size(), a.size());
  EXPECT_EQ(g.at(w).size(), w.size());
}

TEST(Backward, Linearity) {
  const auto v = uniform(8, 12);
  auto grad_of = [&](double ca, double cb) {
    Tape t;
    const Tensor x = t.leaf({3, 4}, v);
    const Tensor f = sum(tanh(x));
    const Tensor g = sum(mul(sigmoid(x), x));
    return t.backward(add(scale(f, ca), scale(g, cb))).at(x);
  };
  const auto gf = grad_of(1, 0), gg = grad_of(0, 1), gmix = grad_of(2.5, -0.75);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(gmix[i], 2.5 * gf[i] - 0.75 * gg[i], 1e-14);
}

TEST(Backward, Deterministic) {
  const auto v = uniform(9, 1100);
  auto run = [&] {
    Tape t;
    const Tensor x = t.leaf({1100}, v);
    return t.backward(weighted_sum(istft(stft(x, StftConfig{}), StftConfig{}, 1100))).at(x);
  };
  EXPECT_EQ(run(), run());
}

TEST(Backward, TapeClear) {
  Tape t;
  const Tensor a = t.leaf({2}, {1, 2});
  t.backward(sum(a));
  EXPECT_GT(t.num_nodes(), 0u);
  t.clear();
  EXPECT_EQ(t.num_nodes(), 0u);
  EXPECT_EQ(t.num_records(), 0u);
}

LstmWeights unpack_lstm(const Tensor& x, int in, int hid) {
  const int n_ih = in * 4 * hid, n_hh = hid * 4 * hid;
  return {reshape(slice(x, 0, 0, n_ih), {in, 4 * hid}), reshape(slice(x, 0, n_ih, n_hh), {hid, 4 * hid}),
          slice(x, 0, n_ih + n_hh, 4 * hid)};
}

TEST(Lstm, ZeroWeightsZeroState) {
  Tape t;
  const LstmWeights w{t.zeros({3, 8}), t.zeros({2, 8}), t.zeros({8})};
  const auto s = lstm_cell(t.leaf({4, 3}, uniform(1, 12)), lstm_zero_state(t, 4, 2), w);
  for (double v : s.h.values()) EXPECT_EQ(v, 0.0);
}

TEST(Lstm, GradientsMatchFiniteDifferences) {
  const int in = 3, hid = 2, batch = 2, steps = 4;
  const int nw = in * 4 * hid + hid * 4 * hid + 4 * hid;
  const auto xs = uniform(77, steps * batch * in);
  for (bool reverse : {false, true}) {
    for (std::uint64_t point = 0; point < 3; ++point) {
      const auto w0 = uniform(50 + point, nw, -0.8, 0.8);
      const auto r = gradient_check(
          [&](Tape& t, const Tensor& w) {
            const Tensor x = t.constant({steps, batch, in}, xs);
            return weighted_sum(lstm_sequence(x, unpack_lstm(w, in, hid), reverse));
          },
          {nw}, w0);
      EXPECT_LT(r.max_rel_error, 1e-4) << "reverse=" << reverse;
    }
  }
  // Inputs as well.
  const auto w0 = uniform(60, nw, -0.8, 0.8);
  const auto r = gradient_check(
      [&](Tape& t, const Tensor& x) {
        const Tensor w = t.constant({nw}, w0);
        return weighted_sum(lstm_sequence(reshape(x, {steps, batch, in}), unpack_lstm(w, in, hid)));
      },
      {steps * batch * in}, xs);
  EXPECT_LT(r.max_rel_error, 1e-4);
}

TEST(Lstm, CellRejectsMismatchedShapes) {
  Tape t;
  const LstmWeights w{t.zeros({3, 8}), t.zeros({2, 8}), t.zeros({8})};
  EXPECT_THROW(lstm_cell(t.zeros({4, 5}), lstm_zero_state(t, 4, 2), w), std::invalid_argument);
  EXPECT_THROW(lstm_cell(t.zeros({4, 3}), lstm_zero_state(t, 4, 3), w), std::invalid_argument);
  const LstmWeights bad{t.zeros({3, 8}), t.zeros({2, 6}), t.zeros({8})};
  EXPECT_THROW(lstm_cell(t.zeros({4, 3}), lstm_zero_state(t, 4, 2), bad), std::invalid_argument);
}

TEST(Lstm, SequenceIsOrderDependent) {
  const int in = 3, hid = 4, steps = 6;
  Tape t;
  const auto wv = uniform(5, in * 4 * hid + hid * 4 * hid + 4 * hid);
  const LstmWeights w = unpack_lstm(t.constant({static_cast<int>(wv.size())}, wv), in, hid);
  const auto xv = uniform(6, steps * in);
  std::vector<double> rev(xv.size());
  for (int s = 0; s < steps; ++s)
    for (int i = 0; i < in; ++i) rev[s * in + i] = xv[(steps - 1 - s) * in + i];
  const Tensor a = lstm_sequence(t.constant({steps, 1, in}, xv), w);
  const Tensor b = lstm_sequence(t.constant({steps, 1, in}, rev), w);
  // Final hidden state after the forward order vs after the reversed order.
  double diff = 0.0;
  for (int h = 0; h < hid; ++h) diff += std::abs(a.values()[(steps - 1) * hid + h] - b.values()[(steps - 1) * hid + h]);
  EXPECT_GT(diff, 1e-3);
}

TEST(GradientCheck, SumOfSquares) {
  const auto x = uniform(3, 20);
  const auto r = gradient_check([](Tape&, const Tensor& t) { return sum(square(t)); }, {20}, x);
  EXPECT_LT(r.max_rel_error, 1e-8);
  EXPECT_EQ(r.checked, 20u);
  EXPECT_EQ(r.excluded, 0u);
}

TEST(GradientCheck, AbsAtZeroIsExcluded) {
  std::vector<double> x{0.5, 0.0, -0.3, 0.0};
  const auto r = gradient_check([](Tape&, const Tensor& t) { return sum(abs(t)); }, {4}, x);
  EXPECT_EQ(r.excluded, 2u);
  EXPECT_EQ(r.checked, 2u);
  EXPECT_LT(r.max_rel_error, 1e-8);
}

TEST(GradientCheck, DirectionalProbesForLargeInputs) {
  const auto x = uniform(4, 5000);
  const auto r = gradient_check([](Tape&, const Tensor& t) { return sum(mul(tanh(t), t)); }, {5000}, x);
  EXPECT_EQ(r.checked, 24u);
  // Round-off in f (about 1e3) over a 1e-5 step bounds the attainable accuracy.
  EXPECT_LT(r.max_rel_error, 1e-5);
}

TEST(GradientCheck, DetectsAWrongGradient) {
  // exp(x) composed with a deliberately inconsistent forward value should fail.
  const auto x = uniform(5, 6);
  const auto r = gradient_check(
      [](Tape& t, const Tensor& v) {
        const Tensor y = exp(v);
        std::vector<double> wrong(y.values().begin(), y.values().end());
        for (double& w : wrong) w *= 2.0;
        // Same gradient as exp, doubled value: the numeric slope doubles.
        const Tensor shadow = t.record(y.shape(), wrong, {v}, [id = v.id()](Tape& tp, int self) {
          const auto g = tp.grad(self);
          auto gx = tp.grad_acc(id);
          for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * std::exp(tp.value(id)[i]);
        });
        return sum(shadow);
      },
      {6}, x);
  EXPECT_GT(r.max_rel_error, 0.4);
}

TEST(GradientCheck, DirectionalOnFlatObjective) {
  // f = sum(theta^3) / 3 with gradient theta^2.
  const auto theta = uniform(5, 40);
  const FlatObjective f = [](std::span<const double> t, std::vector<double>* g) {
    double v = 0.0;
    if (g) g->assign(t.size(), 0.0);
    for (std::size_t i = 0; i < t.size(); ++i) {
      v += t[i] * t[i] * t[i] / 3.0;
      if (g) (*g)[i] = t[i] * t[i];
    }
    return v;
  };
  const auto r = directional_check(f, theta);
  EXPECT_EQ(r.checked, 24u);
  EXPECT_LT(r.max_rel_error, 1e-8);

  const FlatObjective wrong = [&](std::span<const double> t, std::vector<double>* g) {
    const double v = f(t, g);
    if (g) (*g)[3] *= 1.5;
    return v;
  };
  GradCheckOptions opt;
  opt.step_scales = {1.0, 0.1, 0.01};
  EXPECT_GT(directional_check(wrong, theta, opt).max_rel_error, 1e-3);
}

TEST(GradientCheck, RejectsEmptyStepScales) {
  GradCheckOptions opt;
  opt.step_scales.clear();
  EXPECT_THROW(gradient_check([](Tape&, const Tensor& t) { return sum(t); }, {2}, std::vector<double>{1, 2}, opt),
               std::invalid_argument);
}

TEST(GradcheckSuite, ScopeNames) {
  for (auto s : {GradcheckScope::Primitive, GradcheckScope::Auditory, GradcheckScope::Processor, GradcheckScope::End2End})
    EXPECT_EQ(parse_gradcheck_scope(scope_name(s)), s);
  EXPECT_EQ(parse_gradcheck_scope("END2END"), GradcheckScope::End2End);
  EXPECT_THROW(parse_gradcheck_scope("layers"), std::invalid_argument);
}

TEST(GradcheckSuite, ProcessorScopePasses) {
  const auto cases = run_gradcheck_suite(GradcheckScope::Processor);
  ASSERT_EQ(cases.size(), 2u);
  for (const auto& c : cases) EXPECT_TRUE(c.passed()) << c.name << " " << c.report.max_rel_error;
}

TEST(Archive, BitExactRoundTrip) {
  Archive a;
  a.metadata["config"] = R"({"n": 16})";
  a.metadata["step"] = "42";
  auto v = uniform(1, 60);
  v.push_back(-0.0);
  v.push_back(std::nextafter(1.0, 2.0));
  v.push_back(5e-324);
  a.arrays["layer.0.weight"] = {{7, 9}, v};
  a.arrays["scalar"] = {{}, {3.25}};
  a.arrays["empty"] = {{0}, {}};
  const auto path = std::filesystem::temp_directory_path() / "jnrhlc_archive_test.bin";
  a.save(path);
  const Archive b = Archive::load(path);
  EXPECT_EQ(a, b);
  for (std::size_t i = 0; i < v.size(); ++i)
    EXPECT_EQ(std::bit_cast<std::uint64_t>(b.arrays.at("layer.0.weight").values[i]), std::bit_cast<std::uint64_t>(v[i]));
  EXPECT_EQ(a.serialize(), b.serialize());
  std::filesystem::remove(path);
}

TEST(Archive, RejectsCorruptInput) {
  Archive a;
  a.arrays["w"] = {{3}, {1, 2, 3}};
  auto bytes = a.serialize();
  auto truncated = bytes;
  truncated.resize(bytes.size() - 4);
  EXPECT_THROW(Archive::deserialize(truncated), std::runtime_error);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(Archive::deserialize(bad_magic), std::runtime_error);
  auto bad_version = bytes;
  bad_version[8] = 99;
  EXPECT_THROW(Archive::deserialize(bad_version), std::runtime_error);
}

TEST(Archive, ParamSetRoundTrip) {
  ParamSet p;
  p.add("a.weight", {2, 3}, uniform(1, 6));
  p.add("a.bias", {3}, uniform(2, 3));
  Archive ar;
  ar.put_params("params/", p);
  ParamSet q;
  q.add("a.weight", {2, 3}, std::vector<double>(6, 0.0));
  q.add("a.bias", {3}, std::vector<double>(3, 0.0));
  ar.get_params("params/", q);
  EXPECT_EQ(p, q);
  ParamSet wrong;
  wrong.add("a.weight", {3, 2}, std::vector<double>(6, 0.0));
  EXPECT_THROW(ar.get_params("params/", wrong), std::runtime_error);
}

TEST(ParamSet, FlattenOrderAndBinding) {
  ParamSet p;
  p.add("z", {2}, {1, 2});
  p.add("a", {1}, {3});
  EXPECT_EQ(p.flatten(), (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(p.scalar_count(), 3u);
  EXPECT_THROW(p.add("z", {1}, {0}), std::invalid_argument);
  Tape t;
  BoundParams b(t, p, true);
  const auto g = t.backward(sum(mul(b["z"], b["z"])));
  EXPECT_EQ(b.flat_gradient(g), (std::vector<double>{2, 4, 0}));
  p.unflatten({7, 8, 9});
  EXPECT_EQ(p.at("a").values[0], 9.0);
}

TEST(NanPropagation, PiecewiseOpsKeepNan) {
  Tape tape;
  const double nan = std::nan("");
  const auto x = tape.constant({1, 3}, {nan, -1.0, 2.0});
  const auto other = tape.constant({1, 3}, {0.0, nan, 1.0});
  EXPECT_TRUE(std::isnan(relu(x).values()[0]));
  EXPECT_TRUE(std::isnan(sign(x).values()[0]));
  EXPECT_TRUE(std::isnan(abs(x).values()[0]));
  EXPECT_TRUE(std::isnan(minimum(x, other).values()[0]));
  EXPECT_TRUE(std::isnan(minimum(x, other).values()[1]));
  const std::vector<double> a = {1.0}, b = {0.5}, c = {0.25};
  EXPECT_TRUE(std::isnan(broken_stick(x, a, b, c).values()[0]));
  EXPECT_THROW(tape.backward(sum(relu(x))), std::runtime_error);
}

}  // namespace
}  // namespace jnrhlc::ad
