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

#include "jnrhlc/ad/ops.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

#include "jnrhlc/fft.hpp"

namespace jnrhlc::ad {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<const RowMat>;
using MapM = Eigen::Map<RowMat>;

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw std::invalid_argument(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b));
}

int normalize_axis(int axis, int rank, const char* op) {
  if (axis < 0) axis += rank;
  if (axis < 0 || axis >= rank) throw std::invalid_argument(std::string(op) + ": axis out of range");
  return axis;
}

void same_tape(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.valid() || !b.valid()) throw std::invalid_argument(std::string(op) + ": invalid tensor");
  if (&a.tape() != &b.tape()) throw std::invalid_argument(std::string(op) + ": tensors live on different tapes");
}

struct Broadcast {
  Shape out;
  std::vector<std::size_t> sa, sb;  // strides aligned to `out`, 0 where broadcast
};

Broadcast broadcast(const char* op, const Shape& a, const Shape& b) {
  const std::size_t r = std::max(a.size(), b.size());
  Broadcast bc;
  bc.out.assign(r, 1);
  bc.sa.assign(r, 0);
  bc.sb.assign(r, 0);
  std::size_t stride_a = 1, stride_b = 1;
  for (std::size_t i = 0; i < r; ++i) {
    const std::size_t d = r - 1 - i;
    const int da = i < a.size() ? a[a.size() - 1 - i] : 1;
    const int db = i < b.size() ? b[b.size() - 1 - i] : 1;
    if (da != db && da != 1 && db != 1) shape_error(op, a, b);
    bc.out[d] = std::max(da, db);
    bc.sa[d] = da == 1 ? 0 : stride_a;
    bc.sb[d] = db == 1 ? 0 : stride_b;
    stride_a *= static_cast<std::size_t>(da);
    stride_b *= static_cast<std::size_t>(db);
  }
  return bc;
}

// Calls f(i, ia, ib) for every output element in row-major order.
template <class F>
void broadcast_loop(const Broadcast& bc, F&& f) {
  const int r = static_cast<int>(bc.out.size());
  const std::size_t total = numel(bc.out);
  if (total == 0) return;
  if (r == 0) {
    f(std::size_t{0}, std::size_t{0}, std::size_t{0});
    return;
  }
  const std::size_t inner = bc.out[r - 1];
  const std::size_t sa_in = bc.sa[r - 1], sb_in = bc.sb[r - 1];
  std::vector<int> idx(r, 0);
  std::size_t ia0 = 0, ib0 = 0;
  for (std::size_t o = 0; o < total; o += inner) {
    for (std::size_t j = 0; j < inner; ++j) f(o + j, ia0 + j * sa_in, ib0 + j * sb_in);
    for (int d = r - 2; d >= 0; --d) {
      ++idx[d];
      ia0 += bc.sa[d];
      ib0 += bc.sb[d];
      if (idx[d] < bc.out[d]) break;
      ia0 -= bc.sa[d] * bc.out[d];
      ib0 -= bc.sb[d] * bc.out[d];
      idx[d] = 0;
    }
  }
}

// fwd(x, y) -> z; da(x, y) and db(x, y) are the partial derivatives of z.
template <class Fwd, class Da, class Db>
Tensor binary(const char* op, const Tensor& a, const Tensor& b, Fwd fwd, Da da, Db db) {
  same_tape(op, a, b);
  Tape& tape = a.tape();
  const auto va = a.values();
  const auto vb = b.values();
  const int ida = a.id(), idb = b.id();
  if (a.shape() == b.shape()) {
    std::vector<double> out(va.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(va[i], vb[i]);
    return tape.record(a.shape(), std::move(out), {a, b}, [ida, idb, da, db](Tape& t, int self) {
      const auto g = t.grad(self);
      const auto x = t.value(ida);
      const auto y = t.value(idb);
      if (t.requires_grad(ida)) {
        auto ga = t.grad_acc(ida);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * da(x[i], y[i]);
      }
      if (t.requires_grad(idb)) {
        auto gb = t.grad_acc(idb);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * db(x[i], y[i]);
      }
    });
  }
  auto bc = broadcast(op, a.shape(), b.shape());
  std::vector<double> out(numel(bc.out));
  broadcast_loop(bc, [&](std::size_t i, std::size_t ia, std::size_t ib) { out[i] = fwd(va[ia], vb[ib]); });
  Shape out_shape = bc.out;
  return tape.record(std::move(out_shape), std::move(out), {a, b},
                     [ida, idb, da, db, bc = std::move(bc)](Tape& t, int self) {
                       const auto g = t.grad(self);
                       const auto x = t.value(ida);
                       const auto y = t.value(idb);
                       if (t.requires_grad(ida)) {
                         auto ga = t.grad_acc(ida);
                         broadcast_loop(bc, [&](std::size_t i, std::size_t ia, std::size_t ib) {
                           ga[ia] += g[i] * da(x[ia], y[ib]);
                         });
                       }
                       if (t.requires_grad(idb)) {
                         auto gb = t.grad_acc(idb);
                         broadcast_loop(bc, [&](std::size_t i, std::size_t ia, std::size_t ib) {
                           gb[ib] += g[i] * db(x[ia], y[ib]);
                         });
                       }
                     });
}

// fwd(x) -> y; deriv(x, y) -> dy/dx.
template <class Fwd, class Deriv>
Tensor unary(const Tensor& a, Fwd fwd, Deriv deriv) {
  if (!a.valid()) throw std::invalid_argument("unary op on invalid tensor");
  const auto va = a.values();
  std::vector<double> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(va[i]);
  const int ida = a.id();
  return a.tape().record(a.shape(), std::move(out), {a}, [ida, deriv](Tape& t, int self) {
    const auto g = t.grad(self);
    const auto x = t.value(ida);
    const auto y = t.value(self);
    auto ga = t.grad_acc(ida);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * deriv(x[i], y[i]);
  });
}

// NaN maps to NaN so that bad values reach the loss instead of vanishing.
double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : (x == 0.0 ? 0.0 : x)); }

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Tensor minimum(const Tensor& a, const Tensor& b) {
  return binary(
      "minimum", a, b, [](double x, double y) { return std::isnan(y) ? y : std::min(x, y); },
      [](double x, double y) { return x <= y ? 1.0 : 0.0; }, [](double x, double y) { return x <= y ? 0.0 : 1.0; });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor scale(const Tensor& a, double s) {
  return unary(a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Tensor add_scalar(const Tensor& a, double s) {
  return unary(a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  same_tape("matmul", a, b);
  if (a.rank() < 1 || b.rank() != 2 || a.shape().back() != b.dim(0)) shape_error("matmul", a.shape(), b.shape());
  const int k = b.dim(0);
  const int n = b.dim(1);
  const int m = k == 0 ? 0 : static_cast<int>(a.size() / k);
  Shape out_shape = a.shape();
  out_shape.back() = n;
  std::vector<double> out(static_cast<std::size_t>(m) * n);
  MapM(out.data(), m, n).noalias() = MapC(a.values().data(), m, k) * MapC(b.values().data(), k, n);
  const int ida = a.id(), idb = b.id();
  return a.tape().record(std::move(out_shape), std::move(out), {a, b}, [ida, idb, m, k, n](Tape& t, int self) {
    MapC g(t.grad(self).data(), m, n);
    if (t.requires_grad(ida)) {
      MapM(t.grad_acc(ida).data(), m, k).noalias() += g * MapC(t.value(idb).data(), k, n).transpose();
    }
    if (t.requires_grad(idb)) {
      MapM(t.grad_acc(idb).data(), k, n).noalias() += MapC(t.value(ida).data(), m, k).transpose() * g;
    }
  });
}

Tensor relu(const Tensor& a) {
  return unary(a, [](double x) { return x > 0.0 || std::isnan(x) ? x : 0.0; },
               [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor tanh(const Tensor& a) {
  return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor exp(const Tensor& a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor abs(const Tensor& a) {
  return unary(a, [](double x) { return std::abs(x); }, [](double x, double) { return sgn(x); });
}

Tensor square(const Tensor& a) {
  return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor pow_abs(const Tensor& a, double c) {
  return unary(
      a, [c](double x) { return std::pow(std::abs(x), c); },
      [c](double x, double y) { return x == 0.0 ? 0.0 : c * y / x; });
}

Tensor sign(const Tensor& a) {
  const auto va = a.values();
  std::vector<double> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = sgn(va[i]);
  return a.tape().constant(a.shape(), std::move(out));
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  const int ida = a.id();
  return a.tape().record({}, {s}, {a}, [ida](Tape& t, int self) {
    const double g = t.grad(self)[0];
    for (double& v : t.grad_acc(ida)) v += g;
  });
}

Tensor mean(const Tensor& a) {
  if (a.size() == 0) throw std::invalid_argument("mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (numel(shape) != a.size()) shape_error("reshape", a.shape(), shape);
  const auto va = a.values();
  const int ida = a.id();
  return a.tape().record(std::move(shape), std::vector<double>(va.begin(), va.end()), {a}, [ida](Tape& t, int self) {
    const auto g = t.grad(self);
    auto ga = t.grad_acc(ida);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Tensor permute(const Tensor& a, const std::vector<int>& perm) {
  const Shape& in = a.shape();
  const int r = static_cast<int>(in.size());
  if (static_cast<int>(perm.size()) != r) throw std::invalid_argument("permute: permutation rank mismatch");
  std::vector<int> seen(r, 0);
  for (int p : perm) {
    if (p < 0 || p >= r || seen[p]++) throw std::invalid_argument("permute: invalid permutation");
  }
  std::vector<std::size_t> in_stride(r, 1);
  for (int d = r - 2; d >= 0; --d) in_stride[d] = in_stride[d + 1] * in[d + 1];
  Shape out_shape(r);
  std::vector<std::size_t> src_stride(r);
  for (int d = 0; d < r; ++d) {
    out_shape[d] = in[perm[d]];
    src_stride[d] = in_stride[perm[d]];
  }
  // Source index of every output element.
  const std::size_t total = a.size();
  auto index = std::make_shared<std::vector<std::size_t>>(total);
  {
    Broadcast bc;
    bc.out = out_shape;
    bc.sa = src_stride;
    bc.sb.assign(r, 0);
    broadcast_loop(bc, [&](std::size_t i, std::size_t ia, std::size_t) { (*index)[i] = ia; });
  }
  const auto va = a.values();
  std::vector<double> out(total);
  for (std::size_t i = 0; i < total; ++i) out[i] = va[(*index)[i]];
  const int ida = a.id();
  return a.tape().record(std::move(out_shape), std::move(out), {a}, [ida, index](Tape& t, int self) {
    const auto g = t.grad(self);
    auto ga = t.grad_acc(ida);
    for (std::size_t i = 0; i < g.size(); ++i) ga[(*index)[i]] += g[i];
  });
}

Tensor slice(const Tensor& a, int axis, int start, int length) {
  const Shape& in = a.shape();
  axis = normalize_axis(axis, static_cast<int>(in.size()), "slice");
  if (start < 0 || length < 0 || start + length > in[axis])
    throw std::invalid_argument("slice: range [" + std::to_string(start) + ", " + std::to_string(start + length) +
                                ") outside axis of size " + std::to_string(in[axis]));
  std::size_t outer = 1, inner = 1;
  for (int d = 0; d < axis; ++d) outer *= in[d];
  for (std::size_t d = axis + 1; d < in.size(); ++d) inner *= in[d];
  const std::size_t src_row = in[axis] * inner;
  const std::size_t dst_row = static_cast<std::size_t>(length) * inner;
  const std::size_t offset = static_cast<std::size_t>(start) * inner;
  Shape out_shape = in;
  out_shape[axis] = length;
  const auto va = a.values();
  std::vector<double> out(outer * dst_row);
  for (std::size_t o = 0; o < outer; ++o)
    std::copy_n(va.begin() + o * src_row + offset, dst_row, out.begin() + o * dst_row);
  const int ida = a.id();
  return a.tape().record(std::move(out_shape), std::move(out), {a},
                         [ida, outer, src_row, dst_row, offset](Tape& t, int self) {
                           const auto g = t.grad(self);
                           auto ga = t.grad_acc(ida);
                           for (std::size_t o = 0; o < outer; ++o)
                             for (std::size_t j = 0; j < dst_row; ++j) ga[o * src_row + offset + j] += g[o * dst_row + j];
                         });
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  const Shape& first = parts[0].shape();
  const int r = static_cast<int>(first.size());
  axis = normalize_axis(axis, r, "concat");
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const auto& p : parts) {
    same_tape("concat", parts[0], p);
    const Shape& s = p.shape();
    if (static_cast<int>(s.size()) != r) shape_error("concat", first, s);
    for (int d = 0; d < r; ++d)
      if (d != axis && s[d] != first[d]) shape_error("concat", first, s);
    out_shape[axis] += s[axis];
  }
  std::size_t outer = 1, inner = 1;
  for (int d = 0; d < axis; ++d) outer *= first[d];
  for (int d = axis + 1; d < r; ++d) inner *= first[d];
  const std::size_t dst_row = static_cast<std::size_t>(out_shape[axis]) * inner;
  std::vector<double> out(outer * dst_row);
  std::vector<int> ids;
  std::vector<std::size_t> rows, offsets;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t row = static_cast<std::size_t>(p.shape()[axis]) * inner;
    const auto vp = p.values();
    for (std::size_t o = 0; o < outer; ++o) std::copy_n(vp.begin() + o * row, row, out.begin() + o * dst_row + offset);
    ids.push_back(p.id());
    rows.push_back(row);
    offsets.push_back(offset);
    offset += row;
  }
  return parts[0].tape().record(std::move(out_shape), std::move(out), parts,
                                [ids, rows, offsets, outer, dst_row](Tape& t, int self) {
                                  const auto g = t.grad(self);
                                  for (std::size_t p = 0; p < ids.size(); ++p) {
                                    if (!t.requires_grad(ids[p])) continue;
                                    auto gp = t.grad_acc(ids[p]);
                                    for (std::size_t o = 0; o < outer; ++o)
                                      for (std::size_t j = 0; j < rows[p]; ++j)
                                        gp[o * rows[p] + j] += g[o * dst_row + offsets[p] + j];
                                  }
                                });
}

Tensor layer_norm(const Tensor& a, double eps) {
  if (a.rank() < 1 || a.shape().back() == 0) throw std::invalid_argument("layer_norm: need a non-empty last axis");
  const std::size_t n = a.shape().back();
  const std::size_t rows = a.size() / n;
  const auto va = a.values();
  std::vector<double> out(a.size());
  auto inv_std = std::make_shared<std::vector<double>>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = va.data() + r * n;
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += x[j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (x[j] - mu) * (x[j] - mu);
    var /= static_cast<double>(n);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (std::size_t j = 0; j < n; ++j) out[r * n + j] = (x[j] - mu) * is;
  }
  const int ida = a.id();
  return a.tape().record(a.shape(), std::move(out), {a}, [ida, n, rows, inv_std](Tape& t, int self) {
    const auto g = t.grad(self);
    const auto y = t.value(self);
    auto ga = t.grad_acc(ida);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* gr = g.data() + r * n;
      const double* yr = y.data() + r * n;
      double mg = 0.0, mgy = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        mg += gr[j];
        mgy += gr[j] * yr[j];
      }
      mg /= static_cast<double>(n);
      mgy /= static_cast<double>(n);
      const double is = (*inv_std)[r];
      for (std::size_t j = 0; j < n; ++j) ga[r * n + j] += is * (gr[j] - mg - yr[j] * mgy);
    }
  });
}

Tensor broken_stick(const Tensor& x, std::span<const double> a, std::span<const double> b,
                    std::span<const double> c) {
  if (x.rank() != 2) throw std::invalid_argument("broken_stick: expected [C, N] input, got " + shape_str(x.shape()));
  const std::size_t rows = x.dim(0);
  const std::size_t n = x.dim(1);
  if (a.size() != rows || b.size() != rows || c.size() != rows)
    throw std::invalid_argument("broken_stick: parameter count differs from channel count " + std::to_string(rows));
  const auto vx = x.values();
  std::vector<double> out(vx.size());
  // Derivative stored at forward time; the backward pass only scales it.
  auto deriv = std::make_shared<std::vector<double>>(vx.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t i = r * n + j;
      const double ax = std::abs(vx[i]);
      const double lin = a[r] * ax;
      const double cmp = b[r] * std::pow(ax, c[r]);
      if (lin <= cmp) {
        out[i] = sgn(vx[i]) * lin;
        (*deriv)[i] = a[r];
      } else {
        out[i] = sgn(vx[i]) * cmp;
        (*deriv)[i] = c[r] * cmp / ax;
      }
    }
  }
  const int idx = x.id();
  return x.tape().record(x.shape(), std::move(out), {x}, [idx, deriv](Tape& t, int self) {
    const auto g = t.grad(self);
    auto gx = t.grad_acc(idx);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (*deriv)[i];
  });
}

Tensor fir_shared(const Tensor& x, std::shared_ptr<const FirBank> bank, int rows) {
  if (x.rank() != 1) throw std::invalid_argument("fir_shared: expected a [N] input, got " + shape_str(x.shape()));
  const int n = x.dim(0);
  std::vector<double> out(static_cast<std::size_t>(rows) * n);
  bank->apply_shared(x.values(), out, rows);
  const int idx = x.id();
  return x.tape().record({rows, n}, std::move(out), {x}, [idx, bank, rows](Tape& t, int self) {
    bank->adjoint_shared(t.grad(self), t.grad_acc(idx), rows);
  });
}

Tensor fir_rows(const Tensor& x, std::shared_ptr<const FirBank> bank) {
  if (x.rank() != 2) throw std::invalid_argument("fir_rows: expected a [C, N] input, got " + shape_str(x.shape()));
  const int rows = x.dim(0);
  const int n = x.dim(1);
  std::vector<double> out(x.size());
  bank->apply_rows(x.values(), out, rows, n);
  const int idx = x.id();
  return x.tape().record(x.shape(), std::move(out), {x}, [idx, bank, rows, n](Tape& t, int self) {
    bank->adjoint_rows(t.grad(self), t.grad_acc(idx), rows, n);
  });
}

Tensor stft(const Tensor& x, const StftConfig& config) {
  config.validate();
  if (x.rank() != 1) throw std::invalid_argument("stft: expected a [N] input, got " + shape_str(x.shape()));
  const int n = x.dim(0);
  if (n < config.frame_len) throw std::invalid_argument("input too short");
  const int m = config.frame_len;
  const int frames = config.frames_for(n);
  const int bins = config.bins();
  const auto window = std::make_shared<const std::vector<double>>(hann_window(m));
  const RealFft fft(m);
  const auto vx = x.values();
  std::vector<double> buf(m);
  std::vector<std::complex<double>> spec(bins);
  std::vector<double> out(2 * static_cast<std::size_t>(frames) * bins);
  const std::size_t plane = static_cast<std::size_t>(frames) * bins;
  for (int t = 0; t < frames; ++t) {
    const int start = t * config.hop;
    for (int i = 0; i < m; ++i) buf[i] = start + i < n ? vx[start + i] * (*window)[i] : 0.0;
    fft.forward(buf, spec);
    for (int k = 0; k < bins; ++k) {
      out[static_cast<std::size_t>(t) * bins + k] = spec[k].real();
      out[plane + static_cast<std::size_t>(t) * bins + k] = spec[k].imag();
    }
  }
  const int idx = x.id();
  const int hop = config.hop;
  return x.tape().record({2, frames, bins}, std::move(out), {x},
                         [idx, window, n, m, hop, frames, bins, plane](Tape& t, int self) {
                           const auto g = t.grad(self);
                           auto gx = t.grad_acc(idx);
                           const RealFft fft(m);
                           std::vector<std::complex<double>> z(bins);
                           std::vector<double> buf(m);
                           for (int f = 0; f < frames; ++f) {
                             for (int k = 0; k < bins; ++k) {
                               const double gr = g[static_cast<std::size_t>(f) * bins + k];
                               const double gi = g[plane + static_cast<std::size_t>(f) * bins + k];
                               z[k] = (k == 0 || k == bins - 1) ? std::complex<double>(gr, 0.0)
                                                                : std::complex<double>(0.5 * gr, 0.5 * gi);
                             }
                             fft.inverse(z, buf);
                             const int start = f * hop;
                             for (int i = 0; i < m && start + i < n; ++i) gx[start + i] += (*window)[i] * buf[i];
                           }
                         });
}

Tensor istft(const Tensor& spec, const StftConfig& config, int length) {
  config.validate();
  const int bins = config.bins();
  if (spec.rank() != 3 || spec.dim(0) != 2 || spec.dim(2) != bins)
    throw std::invalid_argument("istft: expected [2, T, " + std::to_string(bins) + "] input, got " +
                                shape_str(spec.shape()));
  const int frames = spec.dim(1);
  const int m = config.frame_len;
  const int padded = config.padded_length(frames);
  if (length < 1 || length > padded)
    throw std::invalid_argument("istft: output length " + std::to_string(length) + " not covered by " +
                                std::to_string(frames) + " frames");
  const auto window = std::make_shared<const std::vector<double>>(hann_window(m));
  // Summed squared window; entries at or below 1e-12 mark samples set to 0.
  auto norm = std::make_shared<std::vector<double>>(padded, 0.0);
  for (int f = 0; f < frames; ++f)
    for (int i = 0; i < m; ++i) (*norm)[f * config.hop + i] += (*window)[i] * (*window)[i];
  const RealFft fft(m);
  const auto vs = spec.values();
  const std::size_t plane = static_cast<std::size_t>(frames) * bins;
  std::vector<std::complex<double>> z(bins);
  std::vector<double> buf(m), acc(padded, 0.0);
  const double scale = 1.0 / m;
  for (int f = 0; f < frames; ++f) {
    for (int k = 0; k < bins; ++k)
      z[k] = {vs[static_cast<std::size_t>(f) * bins + k], vs[plane + static_cast<std::size_t>(f) * bins + k]};
    fft.inverse(z, buf);
    const int start = f * config.hop;
    for (int i = 0; i < m; ++i) acc[start + i] += (*window)[i] * buf[i] * scale;
  }
  std::vector<double> out(length);
  for (int j = 0; j < length; ++j) out[j] = (*norm)[j] > 1e-12 ? acc[j] / (*norm)[j] : 0.0;
  const int ids = spec.id();
  const int hop = config.hop;
  return spec.tape().record({length}, std::move(out), {spec},
                            [ids, window, norm, m, hop, frames, bins, plane, length](Tape& t, int self) {
                              const auto g = t.grad(self);
                              auto gs = t.grad_acc(ids);
                              const RealFft fft(m);
                              std::vector<double> buf(m);
                              std::vector<std::complex<double>> r(bins);
                              const double scale = 1.0 / m;
                              for (int f = 0; f < frames; ++f) {
                                const int start = f * hop;
                                for (int i = 0; i < m; ++i) {
                                  const int j = start + i;
                                  buf[i] = j < length && (*norm)[j] > 1e-12 ? (*window)[i] * g[j] / (*norm)[j] * scale : 0.0;
                                }
                                fft.forward(buf, r);
                                for (int k = 0; k < bins; ++k) {
                                  const bool edge = k == 0 || k == bins - 1;
                                  const double c = edge ? 1.0 : 2.0;
                                  gs[static_cast<std::size_t>(f) * bins + k] += c * r[k].real();
                                  if (!edge) gs[plane + static_cast<std::size_t>(f) * bins + k] += c * r[k].imag();
                                }
                              }
                            });
}

}  // namespace jnrhlc::ad
