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
#include <vector>

#include "cmarr/numcore/graph.hpp"
#include "cmarr/numcore/tensor.hpp"

// Differentiable matrix operations over Graph variables. Every op treats its
// operands as 2-D (rows x cols) and reduces in fixed index order.
namespace cmarr {

// Value-level helpers.
std::vector<double> softmax(std::span<const double> v);
Tensor gelu(const Tensor& x);
double gelu(double x);

Var matmul(Var a, Var b);
Var transpose(Var a);

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var hadamard(Var a, Var b);
Var neg(Var a);
Var scale(Var a, double c);
Var add_const(Var a, double c);

// Scalar (1x1) variable broadcasting.
Var mul_scalar(Var a, Var s);
Var add_scalar(Var a, Var s);
Var div_scalar(Var a, Var s);

// Row-vector (1 x cols) broadcasting over every row of `a`.
Var add_row(Var a, Var row);
Var mul_row(Var a, Var row);

Var exp(Var a);
Var log(Var a);
Var tanh(Var a);
Var sigmoid(Var a);
Var softplus(Var a);
Var square(Var a);
Var gelu(Var a);

Var sum(Var a);        // -> 1x1
Var mean(Var a);       // -> 1x1
Var mean_rows(Var a);  // -> 1 x cols, average over rows
Var sum_cols(Var a);   // -> rows x 1, per-row sum

Var softmax_rows(Var a);
Var log_softmax_rows(Var a);
Var layer_norm_rows(Var a, Var gamma, Var beta, double eps = 1e-5);
Var normalize_rows(Var a);

// D(i, j) = ||a_i - b_j||^2.
Var pairwise_sq_dist(Var a, Var b);

Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var slice_rows(Var a, std::size_t begin, std::size_t end);
Var slice_cols(Var a, std::size_t begin, std::size_t end);
Var select_cols(Var a, const std::vector<std::size_t>& index);

// Row t of the result is [x_{t-k/2}, ..., x_{t+k/2}] with zero rows outside
// the sequence; used for same-padded 1-D convolution.
Var unfold_rows(Var a, std::size_t kernel);

}  // namespace cmarr
