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

#include "cmarr/numcore/nn.hpp"

#include <cmath>
#include <vector>

#include "cmarr/error.hpp"
#include "cmarr/numcore/ops.hpp"

namespace cmarr {

void init_linear(ParamStore& store, const std::string& prefix, std::size_t in,
                 std::size_t out, Rng& rng, bool zero) {
  Tensor w = Tensor::matrix(in, out);
  if (!zero) {
    std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(in)));
    for (double& v : w.data()) v = dist(rng);
  }
  store.add(prefix + ".w", std::move(w));
  store.add(prefix + ".b", Tensor::matrix(1, out));
}

Var linear(Graph& g, ParamStore& store, const std::string& prefix, Var x) {
  return add_row(matmul(x, g.param(store, prefix + ".w")), g.param(store, prefix + ".b"));
}

void init_layer_norm(ParamStore& store, const std::string& prefix, std::size_t width) {
  store.add(prefix + ".gamma", Tensor::matrix(1, width, 1.0));
  store.add(prefix + ".beta", Tensor::matrix(1, width));
}

Var layer_norm(Graph& g, ParamStore& store, const std::string& prefix, Var x) {
  return layer_norm_rows(x, g.param(store, prefix + ".gamma"),
                         g.param(store, prefix + ".beta"));
}

void init_conv1d(ParamStore& store, const std::string& prefix, std::size_t in,
                 std::size_t out, std::size_t kernel, Rng& rng, bool zero) {
  init_linear(store, prefix, kernel * in, out, rng, zero);
}

Var conv1d(Graph& g, ParamStore& store, const std::string& prefix, Var x,
           std::size_t kernel) {
  return linear(g, store, prefix, unfold_rows(x, kernel));
}

void init_attention(ParamStore& store, const std::string& prefix, std::size_t dim,
                    Rng& rng) {
  for (const char* p : {".q", ".k", ".v", ".o"}) {
    init_linear(store, prefix + p, dim, dim, rng);
  }
  // A key bias shifts every score of a query row equally, which softmax
  // cancels; it would be a parameter with an identically zero gradient.
  store.entries().erase(prefix + ".k.b");
}

Var multi_head_attention(Graph& g, ParamStore& store, const std::string& prefix, Var q,
                         Var k, Var v, std::size_t heads) {
  const std::size_t dim = q.cols();
  if (heads == 0 || dim % heads != 0) {
    throw ShapeError("attention width " + std::to_string(dim) +
                     " is not divisible by " + std::to_string(heads) + " heads");
  }
  if (k.cols() != dim || v.cols() != dim) {
    throw ShapeError("attention query/key/value widths differ");
  }
  if (k.rows() != v.rows()) throw ShapeError("attention keys and values differ in length");

  const std::size_t head_dim = dim / heads;
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  Var qp = linear(g, store, prefix + ".q", q);
  Var kp = matmul(k, g.param(store, prefix + ".k.w"));
  Var vp = linear(g, store, prefix + ".v", v);

  std::vector<Var> outs;
  outs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t b = h * head_dim, e = b + head_dim;
    Var qh = slice_cols(qp, b, e);
    Var kh = slice_cols(kp, b, e);
    Var vh = slice_cols(vp, b, e);
    Var weights = softmax_rows(scale(matmul(qh, transpose(kh)), inv_scale));
    outs.push_back(matmul(weights, vh));
  }
  Var merged = heads == 1 ? outs.front() : concat_cols(outs);
  return linear(g, store, prefix + ".o", merged);
}

}  // namespace cmarr
