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

#include "jnrhlc/ad/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "jnrhlc/random.hpp"

namespace jnrhlc::ad {

namespace {

using Eval = std::function<double(const std::vector<double>&)>;

double rms_of(const std::vector<double>& x) {
  double rms = 0.0;
  for (double v : x) rms += v * v;
  return x.empty() ? 0.0 : std::sqrt(rms / static_cast<double>(x.size()));
}

struct Prober {
  const Eval& eval;
  const std::vector<double>& x0;
  double f0;
  const GradCheckOptions& options;
  GradCheckReport report;

  // Central difference along `dir`; points on a kink are only counted.
  // `floor` bounds the error denominator from below.
  void probe(const std::vector<double>& dir, double h, double a, std::size_t index, double floor = 0.0) {
    double best = std::numeric_limits<double>::infinity(), best_numeric = 0.0;
    bool any = false;
    for (double s : options.step_scales) {
      const double hs = h * s;
      std::vector<double> xp = x0, xm = x0;
      for (std::size_t i = 0; i < x0.size(); ++i) {
        xp[i] += hs * dir[i];
        xm[i] -= hs * dir[i];
      }
      const double fp = eval(xp);
      const double fm = eval(xm);
      const double fwd = (fp - f0) / hs;
      const double bwd = (f0 - fm) / hs;
      const double slope = std::max(std::abs(fwd), std::abs(bwd));
      if (std::abs(fwd - bwd) > std::max(options.kink_rel * slope, options.kink_abs)) continue;
      const double numeric = (fp - fm) / (2.0 * hs);
      const double scale = std::max({std::abs(a), std::abs(numeric), floor});
      const double err = scale > options.abs_floor ? std::abs(a - numeric) / scale : 0.0;
      any = true;
      if (err < best) {
        best = err;
        best_numeric = numeric;
      }
    }
    if (!any) {
      ++report.excluded;
      return;
    }
    ++report.checked;
    if (best >= report.max_rel_error) {
      report.max_rel_error = best;
      report.worst = index;
      report.worst_analytic = a;
      report.worst_numeric = best_numeric;
    }
  }

  void random_directions(const std::vector<double>& analytic, double h) {
    // |g| / sqrt(n): the RMS of g . d over random unit directions d. A
    // direction nearly orthogonal to g has a tiny derivative, and dividing
    // the difference error by that alone would measure the step, not g.
    const double floor = rms_of(analytic);
    PortableRng rng(options.seed);
    std::vector<double> dir(x0.size());
    for (int k = 0; k < options.directions; ++k) {
      double norm = 0.0;
      for (double& v : dir) {
        v = rng.normal();
        norm += v * v;
      }
      norm = std::sqrt(norm);
      double a = 0.0;
      for (std::size_t i = 0; i < dir.size(); ++i) {
        dir[i] /= norm;
        a += analytic[i] * dir[i];
      }
      probe(dir, h, a, static_cast<std::size_t>(k), floor);
    }
  }
};

void check_options(const GradCheckOptions& options) {
  if (options.step_scales.empty()) throw std::invalid_argument("gradient_check: step_scales is empty");
  for (double s : options.step_scales)
    if (!(s > 0.0)) throw std::invalid_argument("gradient_check: step scales must be positive");
}

}  // namespace

GradCheckReport gradient_check(const ScalarFn& f, const Shape& shape, std::span<const double> x,
                               const GradCheckOptions& options) {
  check_options(options);
  const std::vector<double> x0(x.begin(), x.end());
  std::vector<double> analytic;
  double f0;
  {
    Tape tape;
    const Tensor leaf = tape.leaf(shape, x0, true);
    const Tensor y = f(tape, leaf);
    f0 = y.item();
    analytic = tape.backward(y).at(leaf);
  }
  const Eval eval = [&](const std::vector<double>& v) {
    Tape tape;
    const Tensor leaf = tape.leaf(shape, v, false);
    return f(tape, leaf).item();
  };

  Prober p{eval, x0, f0, options, {}};
  if (x0.size() <= options.max_coordinates) {
    std::vector<double> dir(x0.size(), 0.0);
    for (std::size_t i = 0; i < x0.size(); ++i) {
      dir[i] = 1.0;
      p.probe(dir, options.eps * std::max(1.0, std::abs(x0[i])), analytic[i], i);
      dir[i] = 0.0;
    }
  } else {
    p.random_directions(analytic, options.eps * std::max(1.0, rms_of(x0)));
  }
  return p.report;
}

GradCheckReport directional_check(const FlatObjective& f, std::span<const double> theta,
                                  const GradCheckOptions& options) {
  check_options(options);
  const std::vector<double> x0(theta.begin(), theta.end());
  std::vector<double> analytic;
  const double f0 = f(x0, &analytic);
  if (analytic.size() != x0.size()) throw std::invalid_argument("directional_check: gradient size mismatch");
  const Eval eval = [&](const std::vector<double>& v) { return f(v, nullptr); };
  Prober p{eval, x0, f0, options, {}};
  p.random_directions(analytic, options.eps * std::max(1.0, rms_of(x0)));
  return p.report;
}

}  // namespace jnrhlc::ad
