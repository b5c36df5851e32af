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
#include <string>
#include <vector>

#include "jnrhlc/ad/gradcheck.hpp"

namespace jnrhlc {

// primitive: every tape op (and the LSTM built from them) at 1e-4.
// auditory: each model stage and the full NH/HI losses on a short scene.
// processor: input and parameter gradients of a small dual-head processor.
// end2end: tiny processor (K=3, N=4, L=1) on a 0.2 s scene through the MAE
// auditory losses, at 1e-3.
enum class GradcheckScope { Primitive, Auditory, Processor, End2End };

std::string scope_name(GradcheckScope s);
// primitive | auditory | processor | end2end
GradcheckScope parse_gradcheck_scope(const std::string& s);

struct GradcheckCase {
  std::string name;
  ad::GradCheckReport report;  // worst over all points
  double tolerance = 0.0;

  bool passed() const { return report.checked > 0 && report.max_rel_error < tolerance; }
};

struct GradcheckSuiteOptions {
  int points = 3;  // random evaluation points per primitive
  std::uint64_t seed = 1;
};

std::vector<GradcheckCase> run_gradcheck_suite(GradcheckScope scope, const GradcheckSuiteOptions& options = {});

// Names of the primitive cases, in suite order.
std::vector<std::string> gradcheck_primitive_names();

}  // namespace jnrhlc
