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

#include <cmath>

#include "cmarr/error.hpp"
#include "cmarr/flow/flow.hpp"
#include "cmarr/numcore/ops.hpp"

namespace cmarr {

void init_projection(ParamStore& store, const std::string& prefix, std::size_t in_width,
                     const FlowSpec& spec, Rng& rng) {
  init_conv1d(store, prefix + ".conv", in_width, spec.channels, spec.kernel, rng);
}

Tensor resample_matrix(std::size_t t_in, std::size_t t_out) {
  if (t_in == 0 || t_out == 0) throw ShapeError("resampling needs non-empty sequences");
  Tensor r = Tensor::matrix(t_out, t_in);
  for (std::size_t i = 0; i < t_out; ++i) {
    const double pos = t_out == 1 ? 0.5 * static_cast<double>(t_in - 1)
                                  : static_cast<double>(i) * static_cast<double>(t_in - 1) /
                                        static_cast<double>(t_out - 1);
    const auto left = static_cast<std::size_t>(std::floor(pos));
    const double w = pos - static_cast<double>(left);
    r(i, left) += 1.0 - w;
    if (w > 0.0) r(i, left + 1) += w;
  }
  return r;
}

Var project_modality(Graph& g, ParamStore& store, const std::string& prefix,
                     const FlowSpec& spec, Var adapted) {
  if (adapted.rows() == 0) throw ShapeError("project_modality: empty sequence");
  Var conv = conv1d(g, store, prefix + ".conv", adapted, spec.kernel);
  if (conv.rows() == spec.length) return conv;
  return matmul(g.constant(resample_matrix(conv.rows(), spec.length)), conv);
}

}  // namespace cmarr
