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

#include "cmarr/alignment/alignment.hpp"
#include "cmarr/error.hpp"
#include "cmarr/numcore/ops.hpp"

namespace cmarr {

std::string adapter_prefix(Modality m) { return std::string("adapter.") + short_name(m); }

void init_adapter(ParamStore& store, Modality m, std::size_t in_dim, std::size_t width,
                  Rng& rng) {
  const std::string p = adapter_prefix(m);
  init_linear(store, p + ".l1", in_dim, width, rng);
  init_linear(store, p + ".l2", width, width, rng);
}

Var adapter_forward(Graph& g, ParamStore& store, Modality m, Var frames) {
  const std::string p = adapter_prefix(m);
  return linear(g, store, p + ".l2", gelu(linear(g, store, p + ".l1", frames)));
}

void init_umc(ParamStore& store, const UmcSpec& spec, Rng& rng) {
  init_linear(store, "umc.mlp1", spec.width, spec.hidden, rng);
  init_linear(store, "umc.mlp2", spec.hidden, spec.width, rng);
  init_layer_norm(store, "umc.ln1", spec.width);
  init_attention(store, "umc.att", spec.width, rng);
  init_layer_norm(store, "umc.ln2", spec.width);
  init_linear(store, "umc.mu", spec.width, spec.embed_dim, rng);
  init_linear(store, "umc.logvar", spec.width, spec.embed_dim, rng);
  // Small heads keep initial distances, and so the logits S / tau, of order one.
  for (const char* head : {"umc.mu.w", "umc.logvar.w"}) {
    for (double& w : store.value(head).data()) w *= spec.head_init_scale;
  }
}

GaussianVars umc_forward(Graph& g, ParamStore& store, const UmcSpec& spec, Var adapted) {
  if (adapted.rows() == 0) throw ArgumentError("umc_forward: empty sequence");
  Var ff = linear(g, store, "umc.mlp2", gelu(linear(g, store, "umc.mlp1", adapted)));
  Var h = layer_norm(g, store, "umc.ln1", adapted + ff);
  Var att = multi_head_attention(g, store, "umc.att", h, h, h, spec.heads);
  Var h2 = layer_norm(g, store, "umc.ln2", h + att);
  Var pooled = mean_rows(h2);
  return {linear(g, store, "umc.mu", pooled), exp(linear(g, store, "umc.logvar", pooled))};
}

GaussianEmb umc_embed(ParamStore& store, const UmcSpec& spec, Modality m,
                      const Tensor& features) {
  if (features.rows() == 0) throw ArgumentError("umc_forward: empty sequence");
  Graph g(false);
  Var adapted = adapter_forward(g, store, m, g.constant(features));
  GaussianVars out = umc_forward(g, store, spec, adapted);
  return {out.mu.value(), out.var.value()};
}

void init_alignment_scalars(ParamStore& store) {
  store.add("align.tau", Tensor::scalar(0.07));
  // softplus(log(e - 1)) = 1, so a starts at -1.
  store.add("align.a_raw", Tensor::scalar(std::log(std::exp(1.0) - 1.0)));
  store.add("align.b", Tensor::scalar(0.0));
}

Var temperature(Graph& g, ParamStore& store) { return g.param(store, "align.tau"); }

Var negative_scale(Graph& g, ParamStore& store) {
  return neg(softplus(g.param(store, "align.a_raw")));
}

Var shift(Graph& g, ParamStore& store) { return g.param(store, "align.b"); }

void clamp_temperature(ParamStore& store) {
  double& tau = store.value("align.tau")[0];
  tau = std::clamp(tau, kTauMin, kTauMax);
}

}  // namespace cmarr
