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

#include "jnrhlc/ad/tensor.hpp"

namespace jnrhlc::ad {

// Gate columns are ordered input, forget, candidate, output.
struct LstmWeights {
  Tensor w_ih;  // [I, 4H]
  Tensor w_hh;  // [H, 4H]
  Tensor bias;  // [4H]

  int input_size() const { return w_ih.dim(0); }
  int hidden_size() const { return w_hh.dim(0); }
  // Throws std::invalid_argument if the three shapes disagree.
  void validate() const;
};

struct LstmState {
  Tensor h;  // [B, H]
  Tensor c;  // [B, H]
};

LstmState lstm_zero_state(Tape& tape, int batch, int hidden);

// One step. x: [B, I].
LstmState lstm_cell(const Tensor& x, const LstmState& prev, const LstmWeights& w);

// Runs the cell over x: [S, B, I] and returns the hidden states [S, B, H].
// With reverse == true the recurrence starts at the last step; outputs stay
// aligned with their input positions.
Tensor lstm_sequence(const Tensor& x, const LstmWeights& w, bool reverse = false);

}  // namespace jnrhlc::ad
