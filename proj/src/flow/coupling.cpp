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
#include <cstdint>
#include <numeric>
#include <random>

#include "cmarr/error.hpp"
#include "cmarr/flow/flow.hpp"
#include "cmarr/numcore/ops.hpp"

namespace cmarr {

namespace {

std::string layer_prefix(const std::string& prefix, std::size_t k) {
  return prefix + "." + std::to_string(k);
}

struct Partition {
  std::vector<std::size_t> conditioner;  // unchanged half
  std::vector<std::size_t> transformed;  // affinely transformed half
  std::vector<std::size_t> restore;      // maps [conditioner ; transformed] back
};

// Alternating mask: layer k conditions on channels with parity k % 2.
Partition partition(std::size_t channels, std::size_t k) {
  Partition p;
  for (std::size_t j = 0; j < channels; ++j) {
    ((j % 2) == (k % 2) ? p.conditioner : p.transformed).push_back(j);
  }
  p.restore.resize(channels);
  std::size_t pos = 0;
  for (std::size_t j : p.conditioner) p.restore[j] = pos++;
  for (std::size_t j : p.transformed) p.restore[j] = pos++;
  return p;
}

std::vector<std::size_t> inverse_of(const std::vector<std::size_t>& perm) {
  std::vector<std::size_t> inv(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = i;
  return inv;
}

void require_config(const FlowSpec& spec, Var x) {
  if (spec.channels == 0 || spec.channels % 2 != 0) {
    throw ConfigError("flow channel count must be even, got " + std::to_string(spec.channels));
  }
  if (x.cols() != spec.channels) {
    throw ShapeError("flow input has " + std::to_string(x.cols()) + " channels, expected " +
                     std::to_string(spec.channels));
  }
}

struct ScaleShift {
  Var log_scale;
  Var shift;
};

ScaleShift coupling_nets(Graph& g, ParamStore& store, const std::string& lp,
                         const FlowSpec& spec, Var cond) {
  Var raw = linear(g, store, lp + ".s2", gelu(linear(g, store, lp + ".s1", cond)));
  Var log_scale = scale(tanh(scale(raw, 1.0 / spec.max_log_scale)), spec.max_log_scale);
  Var shift = linear(g, store, lp + ".t2", gelu(linear(g, store, lp + ".t1", cond)));
  return {log_scale, shift};
}

// Net channel order produced by the inter-layer permutations.
std::vector<std::size_t> composite_permutation(const FlowSpec& spec) {
  std::vector<std::size_t> idx(spec.channels);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t k = 0; k + 1 < spec.coupling_layers; ++k) {
    const std::vector<std::size_t> perm = coupling_permutation(spec.channels, k);
    std::vector<std::size_t> next(idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) next[j] = idx[perm[j]];
    idx = std::move(next);
  }
  return idx;
}

}  // namespace

std::vector<std::size_t> coupling_permutation(std::size_t channels, std::size_t layer) {
  std::vector<std::size_t> perm(channels);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  // Fisher-Yates with a raw engine draw keeps the permutation portable.
  std::mt19937_64 rng(0x9e3779b97f4a7c15ULL + layer);
  for (std::size_t i = channels; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

void init_flow(ParamStore& store, const std::string& prefix, const FlowSpec& spec, Rng& rng) {
  if (spec.channels == 0 || spec.channels % 2 != 0) {
    throw ConfigError("flow channel count must be even, got " + std::to_string(spec.channels));
  }
  const std::size_t half = spec.channels / 2;
  for (std::size_t k = 0; k < spec.coupling_layers; ++k) {
    const std::string lp = layer_prefix(prefix, k);
    init_linear(store, lp + ".s1", half, spec.coupling_hidden, rng);
    init_linear(store, lp + ".s2", spec.coupling_hidden, half, rng, /*zero=*/true);
    init_linear(store, lp + ".t1", half, spec.coupling_hidden, rng);
    init_linear(store, lp + ".t2", spec.coupling_hidden, half, rng, /*zero=*/true);
  }
}

FlowOutput coupling_forward(Graph& g, ParamStore& store, const std::string& prefix,
                            const FlowSpec& spec, std::size_t layer, Var x) {
  require_config(spec, x);
  const Partition p = partition(spec.channels, layer);
  Var cond = select_cols(x, p.conditioner);
  Var moved = select_cols(x, p.transformed);
  const ScaleShift ss = coupling_nets(g, store, layer_prefix(prefix, layer), spec, cond);
  Var y = hadamard(moved, exp(ss.log_scale)) + ss.shift;
  return {select_cols(concat_cols({cond, y}), p.restore), sum_cols(ss.log_scale)};
}

FlowOutput flow_forward(Graph& g, ParamStore& store, const std::string& prefix,
                        const FlowSpec& spec, Var x) {
  require_config(spec, x);
  Var logdet = g.constant(Tensor::matrix(x.rows(), 1));
  for (std::size_t k = 0; k < spec.coupling_layers; ++k) {
    const FlowOutput layer = coupling_forward(g, store, prefix, spec, k, x);
    x = layer.latent;
    logdet = logdet + layer.logdet;
    if (k + 1 < spec.coupling_layers) x = select_cols(x, coupling_permutation(spec.channels, k));
  }
  if (spec.coupling_layers > 1) x = select_cols(x, inverse_of(composite_permutation(spec)));
  return {x, logdet};
}

Var flow_inverse(Graph& g, ParamStore& store, const std::string& prefix,
                 const FlowSpec& spec, Var z) {
  require_config(spec, z);
  Var x = z;
  if (spec.coupling_layers > 1) x = select_cols(x, composite_permutation(spec));
  for (std::size_t k = spec.coupling_layers; k-- > 0;) {
    if (k + 1 < spec.coupling_layers) {
      x = select_cols(x, inverse_of(coupling_permutation(spec.channels, k)));
    }
    const Partition p = partition(spec.channels, k);
    Var cond = select_cols(x, p.conditioner);
    Var y = select_cols(x, p.transformed);
    const ScaleShift ss = coupling_nets(g, store, layer_prefix(prefix, k), spec, cond);
    Var moved = hadamard(y - ss.shift, exp(neg(ss.log_scale)));
    x = select_cols(concat_cols({cond, moved}), p.restore);
    if (!x.value().all_finite()) {
      throw NumericError("flow_inverse: non-finite value after coupling layer " +
                         std::to_string(k) + " of " + prefix);
    }
  }
  return x;
}

FlowValues flow_forward(ParamStore& store, const std::string& prefix, const FlowSpec& spec,
                        const Tensor& x) {
  Graph g(false);
  FlowOutput out = flow_forward(g, store, prefix, spec, g.constant(x));
  return {out.latent.value(), out.logdet.value()};
}

Tensor flow_inverse(ParamStore& store, const std::string& prefix, const FlowSpec& spec,
                    const Tensor& z) {
  Graph g(false);
  return flow_inverse(g, store, prefix, spec, g.constant(z)).value();
}

Var latent_transfer(const std::map<Modality, Var>& available, Modality target) {
  if (available.empty()) throw ArgumentError("latent_transfer: no available modality");
  if (available.count(target) != 0) {
    throw ArgumentError(std::string("latent_transfer: target modality ") + short_name(target) +
                        " is available");
  }
  if (available.size() == 1) return available.begin()->second;
  auto it = available.begin();
  Var acc = it->second;
  for (++it; it != available.end(); ++it) acc = acc + it->second;
  return scale(acc, 1.0 / static_cast<double>(available.size()));
}

}  // namespace cmarr
