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
#include <random>
#include <string>

#include "cmarr/numcore/graph.hpp"
#include "cmarr/numcore/param_store.hpp"

// Parameterized building blocks. Each block owns the parameters under a
// path prefix in a ParamStore; init_* creates them, the forward functions
// bind them into a Graph.
namespace cmarr {

using Rng = std::mt19937_64;

/// Weights prefix.w (in x out) and bias prefix.b (1 x out). Weights are drawn
/// from N(0, 1/in) unless `zero` is set.
void init_linear(ParamStore& store, const std::string& prefix, std::size_t in,
                 std::size_t out, Rng& rng, bool zero = false);
Var linear(Graph& g, ParamStore& store, const std::string& prefix, Var x);

void init_layer_norm(ParamStore& store, const std::string& prefix, std::size_t width);
Var layer_norm(Graph& g, ParamStore& store, const std::string& prefix, Var x);

/// Same-padded 1-D convolution along time (rows). Weights are stored as a
/// (kernel*in) x out matrix whose row block k multiplies the frame at offset
/// k - kernel/2.
void init_conv1d(ParamStore& store, const std::string& prefix, std::size_t in,
                 std::size_t out, std::size_t kernel, Rng& rng, bool zero = false);
Var conv1d(Graph& g, ParamStore& store, const std::string& prefix, Var x,
           std::size_t kernel);

/// Projections prefix.{q,k,v,o}, each dim x dim; the key projection has no bias.
void init_attention(ParamStore& store, const std::string& prefix, std::size_t dim,
                    Rng& rng);

/// Multi-head scaled dot-product attention. Q is (Tq x dim), K and V are
/// (Tk x dim); the result is (Tq x dim). No positional encoding is applied.
Var multi_head_attention(Graph& g, ParamStore& store, const std::string& prefix, Var q,
                         Var k, Var v, std::size_t heads);

}  // namespace cmarr
