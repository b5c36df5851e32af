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

#include "jnrhlc/ad/lstm.hpp"

#include <stdexcept>
#include <string>

#include "jnrhlc/ad/ops.hpp"

namespace jnrhlc::ad {

namespace {

LstmState step(const Tensor& gates_x, const LstmState& prev, const LstmWeights& w) {
  const int h = w.hidden_size();
  const Tensor gates = add(gates_x, matmul(prev.h, w.w_hh));
  const Tensor i = sigmoid(slice(gates, 1, 0, h));
  const Tensor f = sigmoid(slice(gates, 1, h, h));
  const Tensor g = tanh(slice(gates, 1, 2 * h, h));
  const Tensor o = sigmoid(slice(gates, 1, 3 * h, h));
  const Tensor c = add(mul(f, prev.c), mul(i, g));
  return {mul(o, tanh(c)), c};
}

}  // namespace

void LstmWeights::validate() const {
  if (!w_ih.valid() || !w_hh.valid() || !bias.valid()) throw std::invalid_argument("LSTM weights not bound");
  if (w_ih.rank() != 2 || w_hh.rank() != 2 || bias.rank() != 1)
    throw std::invalid_argument("LSTM weights must be [I,4H], [H,4H], [4H]");
  const int h = w_hh.dim(0);
  if (w_hh.dim(1) != 4 * h || w_ih.dim(1) != 4 * h || bias.dim(0) != 4 * h)
    throw std::invalid_argument("LSTM weight shapes " + shape_str(w_ih.shape()) + ", " + shape_str(w_hh.shape()) +
                                ", " + shape_str(bias.shape()) + " disagree on the hidden size");
}

LstmState lstm_zero_state(Tape& tape, int batch, int hidden) {
  return {tape.zeros({batch, hidden}), tape.zeros({batch, hidden})};
}

LstmState lstm_cell(const Tensor& x, const LstmState& prev, const LstmWeights& w) {
  w.validate();
  if (x.rank() != 2 || x.dim(1) != w.input_size())
    throw std::invalid_argument("lstm_cell: input " + shape_str(x.shape()) + " does not match w_ih " +
                                shape_str(w.w_ih.shape()));
  const int h = w.hidden_size();
  if (prev.h.shape() != Shape{x.dim(0), h} || prev.c.shape() != Shape{x.dim(0), h})
    throw std::invalid_argument("lstm_cell: state shape " + shape_str(prev.h.shape()) + " does not match [B, " +
                                std::to_string(h) + "]");
  return step(add(matmul(x, w.w_ih), w.bias), prev, w);
}

Tensor lstm_sequence(const Tensor& x, const LstmWeights& w, bool reverse) {
  w.validate();
  if (x.rank() != 3 || x.dim(2) != w.input_size())
    throw std::invalid_argument("lstm_sequence: input " + shape_str(x.shape()) + " does not match w_ih " +
                                shape_str(w.w_ih.shape()));
  const int s = x.dim(0);
  const int b = x.dim(1);
  const int h = w.hidden_size();
  // Input projections for every step in one product.
  const Tensor proj = add(matmul(x, w.w_ih), w.bias);  // [S, B, 4H]
  LstmState state = lstm_zero_state(x.tape(), b, h);
  std::vector<Tensor> outputs(s);
  for (int n = 0; n < s; ++n) {
    const int t = reverse ? s - 1 - n : n;
    state = step(reshape(slice(proj, 0, t, 1), {b, 4 * h}), state, w);
    outputs[t] = reshape(state.h, {1, b, h});
  }
  return concat(outputs, 0);
}

}  // namespace jnrhlc::ad
