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
#include <span>
#include <string>
#include <vector>

#include "cmarr/data/modality.hpp"
#include "cmarr/numcore/graph.hpp"
#include "cmarr/numcore/nn.hpp"
#include "cmarr/numcore/param_store.hpp"
#include "cmarr/numcore/tensor.hpp"

namespace cmarr {

/// Diagonal Gaussian embedding; mu and var are 1 x d_e row vectors.
struct GaussianEmb {
  Tensor mu;
  Tensor var;
};

/// Graph-level Gaussian embeddings, one row per instance.
struct GaussianVars {
  Var mu;
  Var var;
};

struct UmcSpec {
  std::size_t width = 16;   // adapter output width shared by all modalities
  std::size_t hidden = 32;  // feature-level MLP hidden width
  std::size_t embed_dim = 8;
  std::size_t heads = 2;
  double head_init_scale = 0.1;  // multiplies the initial mu / log-var head weights
};

// Per-modality adapters: a two-layer frame-wise MLP from the raw feature width
// to the shared width. Parameters live under "adapter.<s|v|t>".
std::string adapter_prefix(Modality m);
void init_adapter(ParamStore& store, Modality m, std::size_t in_dim, std::size_t width,
                  Rng& rng);
Var adapter_forward(Graph& g, ParamStore& store, Modality m, Var frames);

// Uncertainty modeling component, shared by the three modalities ("umc.*").
void init_umc(ParamStore& store, const UmcSpec& spec, Rng& rng);
// Adapted frames (T x width) -> feature-level MLP with gelu and LayerNorm ->
// self-attention with residual and LayerNorm -> mean pool -> mu / log-var heads.
GaussianVars umc_forward(Graph& g, ParamStore& store, const UmcSpec& spec, Var adapted);
GaussianEmb umc_embed(ParamStore& store, const UmcSpec& spec, Modality m,
                      const Tensor& features);

// Learned temperature tau, scale a = -softplus(a_raw) and shift b ("align.*").
void init_alignment_scalars(ParamStore& store);
Var temperature(Graph& g, ParamStore& store);
Var negative_scale(Graph& g, ParamStore& store);
Var shift(Graph& g, ParamStore& store);
void clamp_temperature(ParamStore& store);
inline constexpr double kTauMin = 0.01;
inline constexpr double kTauMax = 0.5;

/// ||mu1 - mu2||^2 + ||var1 - var2||^2 over the variance vectors.
double wasserstein2(const GaussianEmb& g1, const GaussianEmb& g2);
/// a * wasserstein2(g1, g2) + b.
double similarity(const GaussianEmb& g1, const GaussianEmb& g2, double a, double b);

/// S(i, j) = a * W2(A_i, B_j) + b for every pair of rows.
Var similarity_matrix(const GaussianVars& lhs, const GaussianVars& rhs, Var a, Var b);

/// Symmetric InfoNCE over an N x N similarity matrix whose diagonal holds the
/// positive pairs: mean over rows of -log softmax(S/tau)_ii plus the same over
/// columns.
Var infonce_from_similarity(Var sim, Var tau);
Var infonce_pair_loss(const GaussianVars& lhs, const GaussianVars& rhs, Var tau, Var a,
                      Var b);
double infonce_pair_loss(std::span<const GaussianEmb> lhs, std::span<const GaussianEmb> rhs,
                         double tau, double a, double b);

/// Sum of the pair losses over (s,t), (t,v), (s,v).
Var udcl_loss(const GaussianVars& s, const GaussianVars& v, const GaussianVars& t, Var tau,
              Var a, Var b);

/// Point-embedding variant: cosine similarity of the mean rows, no variance.
Var point_infonce_pair_loss(Var lhs, Var rhs, Var tau);

}  // namespace cmarr
