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

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cmarr/flow/flow.hpp"
#include "cmarr/numcore/ops.hpp"

namespace cmarr {

namespace {

std::string block_prefix(const std::string& prefix, std::size_t b) {
  return prefix + "." + std::to_string(b);
}

}  // namespace

void init_refiner(ParamStore& store, const std::string& prefix, const FlowSpec& spec,
                  Rng& rng, bool zero_convs) {
  const std::size_t c = spec.channels;
  const std::size_t squeezed = std::max<std::size_t>(1, c / spec.attention_reduction);
  for (std::size_t b = 0; b < spec.refine_blocks; ++b) {
    const std::string bp = block_prefix(prefix, b);
    init_conv1d(store, bp + ".conv1", c, c, spec.kernel, rng, zero_convs);
    init_conv1d(store, bp + ".conv2", c, c, spec.kernel, rng, zero_convs);
    init_linear(store, bp + ".ca1", c, squeezed, rng);
    init_linear(store, bp + ".ca2", squeezed, c, rng);
  }
}

Var channel_gates(Graph& g, ParamStore& store, const std::string& block_prefix, Var y) {
  Var pooled = mean_rows(y);
  return sigmoid(linear(g, store, block_prefix + ".ca2",
                        gelu(linear(g, store, block_prefix + ".ca1", pooled))));
}

Var refine_reconstruction(Graph& g, ParamStore& store, const std::string& prefix,
                          const FlowSpec& spec, Var x) {
  for (std::size_t b = 0; b < spec.refine_blocks; ++b) {
    const std::string bp = block_prefix(prefix, b);
    Var y = conv1d(g, store, bp + ".conv2",
                   gelu(conv1d(g, store, bp + ".conv1", x, spec.kernel)), spec.kernel);
    x = x + mul_row(y, channel_gates(g, store, bp, y));
  }
  return x;
}

Var rec_loss(Var reconstructed, Var target) {
  return sum(square(reconstructed - target));
}

Var flow_nll(Var latent, Var logdet) {
  const double d = static_cast<double>(latent.cols());
  Var per_frame = scale(sum_cols(square(latent)), 0.5) - logdet;
  return add_const(mean(per_frame), 0.5 * d * std::log(2.0 * std::numbers::pi));
}

}  // namespace cmarr
