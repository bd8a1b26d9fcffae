// Copyright 2026 The cmarr Authors.
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

#include <functional>
#include <string>
#include <vector>

#include "cmarr/numcore/graph.hpp"
#include "cmarr/numcore/param_store.hpp"

namespace cmarr {

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  double max_abs_analytic = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error() const;
  const GradCheckEntry* worst() const;
};

// Builds a scalar loss from the store on the supplied graph.
using LossFn = std::function<Var(Graph&, ParamStore&)>;

/// Compares backprop gradients against central differences
/// (f(p+eps) - f(p-eps)) / 2eps for every scalar of every parameter accepted
/// by `filter` (all when empty). Relative error per scalar is
/// |a - n| / max(|a|, |n|, 1e-8). Leaves parameter values unchanged.
GradCheckReport grad_check(const LossFn& loss_fn, ParamStore& params, double eps = 1e-5,
                           const std::function<bool(const std::string&)>& filter = {});

}  // namespace cmarr
