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

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "cmarr/data/modality.hpp"
#include "cmarr/numcore/graph.hpp"
#include "cmarr/numcore/nn.hpp"
#include "cmarr/numcore/param_store.hpp"
#include "cmarr/numcore/tensor.hpp"

namespace cmarr {

struct FlowSpec {
  std::size_t channels = 16;  // d_c, must be even
  std::size_t length = 8;     // T_c
  std::size_t coupling_layers = 4;
  std::size_t coupling_hidden = 16;
  double max_log_scale = 2.0;
  std::size_t refine_blocks = 2;
  std::size_t attention_reduction = 4;
  std::size_t kernel = 3;
};

// ---- projection to the common (T_c, d_c) space ("proj.<m>") ----

void init_projection(ParamStore& store, const std::string& prefix, std::size_t in_width,
                     const FlowSpec& spec, Rng& rng);
/// Same-padded 1-D convolution to d_c channels, then linear-interpolation
/// resampling along time to T_c frames.
Var project_modality(Graph& g, ParamStore& store, const std::string& prefix,
                     const FlowSpec& spec, Var adapted);
/// (t_out x t_in) linear-interpolation matrix with aligned end points.
Tensor resample_matrix(std::size_t t_in, std::size_t t_out);

// ---- affine coupling flow ("flow.<m>") ----

/// Scale and translation nets are two-layer MLPs whose output layers start at
/// zero, so a fresh flow is the identity.
void init_flow(ParamStore& store, const std::string& prefix, const FlowSpec& spec, Rng& rng);

struct FlowOutput {
  Var latent;  // T x d_c
  Var logdet;  // T x 1, per frame
};

FlowOutput flow_forward(Graph& g, ParamStore& store, const std::string& prefix,
                        const FlowSpec& spec, Var x);
/// Exact inverse; throws NumericError if an intermediate is not finite.
Var flow_inverse(Graph& g, ParamStore& store, const std::string& prefix,
                 const FlowSpec& spec, Var z);

// Value-level conveniences on a non-recording graph.
struct FlowValues {
  Tensor latent;
  Tensor logdet;
};
FlowValues flow_forward(ParamStore& store, const std::string& prefix, const FlowSpec& spec,
                        const Tensor& x);
Tensor flow_inverse(ParamStore& store, const std::string& prefix, const FlowSpec& spec,
                    const Tensor& z);

/// One coupling layer (no trailing permutation).
FlowOutput coupling_forward(Graph& g, ParamStore& store, const std::string& prefix,
                            const FlowSpec& spec, std::size_t layer, Var x);

/// Fixed permutation applied after coupling layer `layer`; the stack restores the
/// original channel order after the last layer.
std::vector<std::size_t> coupling_permutation(std::size_t channels, std::size_t layer);

/// Elementwise mean of the available modalities' latents.
Var latent_transfer(const std::map<Modality, Var>& available, Modality target);

// ---- residual channel-attention refinement ("refine.<m>") ----

void init_refiner(ParamStore& store, const std::string& prefix, const FlowSpec& spec,
                  Rng& rng, bool zero_convs = false);
Var refine_reconstruction(Graph& g, ParamStore& store, const std::string& prefix,
                          const FlowSpec& spec, Var x);
/// Sigmoid channel gates of one block, exposed for inspection.
Var channel_gates(Graph& g, ParamStore& store, const std::string& block_prefix, Var y);

// ---- losses ----

/// Squared Frobenius norm of the difference.
Var rec_loss(Var reconstructed, Var target);
/// Mean over frames of 0.5 ||z||^2 + (d/2) log 2pi - logdet.
Var flow_nll(Var latent, Var logdet);

}  // namespace cmarr
