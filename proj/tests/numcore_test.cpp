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
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "doctest.h"

#include "cmarr/error.hpp"
#include "cmarr/numcore/grad_check.hpp"
#include "cmarr/numcore/nn.hpp"
#include "cmarr/numcore/ops.hpp"
#include "test_util.hpp"

using namespace cmarr;
using cmarr::testing::max_abs_diff;
using cmarr::testing::random_matrix;

namespace {

// x * Phi(x) with erf from its Maclaurin series, summed in long double.
double gelu_series_oracle(double x) {
  const long double z = static_cast<long double>(x) / std::sqrt(2.0L);
  long double term = z;  // z^(2n+1) / n!
  long double sum = 0.0L;
  for (int n = 0; n < 60; ++n) {
    sum += term / static_cast<long double>(2 * n + 1);
    term *= -z * z / static_cast<long double>(n + 1);
  }
  const long double erf = 2.0L / std::sqrt(3.14159265358979323846264338327950288L) * sum;
  return static_cast<double>(static_cast<long double>(x) * 0.5L * (1.0L + erf));
}

}  // namespace

TEST_CASE("softmax examples") {
  auto a = softmax(std::vector<double>{0.0, 0.0});
  CHECK(a[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(a[1] == doctest::Approx(0.5).epsilon(1e-15));

  auto b = softmax(std::vector<double>{1.0, 1.0, 1.0});
  for (double v : b) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  auto c = softmax(std::vector<double>{100.0, 0.0});
  CHECK(std::isfinite(c[0]));
  CHECK(c[0] == doctest::Approx(1.0));
  CHECK(c[1] == doctest::Approx(std::exp(-100.0)).epsilon(1e-12));

  CHECK_THROWS_AS(softmax(std::vector<double>{}), ArgumentError);
}

TEST_CASE("softmax sums to one for large finite inputs") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(-1e4, 1e4);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(1 + trial % 17);
    for (double& x : v) x = dist(rng);
    auto p = softmax(v);
    const double s = std::accumulate(p.begin(), p.end(), 0.0);
    CHECK(std::abs(s - 1.0) <= 1e-12);
    for (double x : p) CHECK(x >= 0.0);
  }
}

TEST_CASE("gelu examples") {
  CHECK(gelu(0.0) == 0.0);
  CHECK(gelu(30.0) == doctest::Approx(30.0).epsilon(1e-15));
  CHECK(std::abs(gelu(1.0) - gelu_series_oracle(1.0)) < 1e-10);
  CHECK(std::abs(gelu(-0.7) - gelu_series_oracle(-0.7)) < 1e-10);

  Tensor t = Tensor::from_rows({{0.0, 1.0}});
  Tensor y = gelu(t);
  CHECK(y[0] == 0.0);
  CHECK(std::abs(y[1] - gelu_series_oracle(1.0)) < 1e-10);
  t[0] = std::nan("");
  CHECK_THROWS_AS(gelu(t), NumericError);
}

TEST_CASE("tensor rejects mismatched data") {
  CHECK_THROWS_AS(Tensor({2, 3}, std::vector<double>(5)), ShapeError);
  Tensor t = Tensor::matrix(2, 2, std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(t.require_finite("probe"), NumericError);
}

TEST_CASE("attention with identical keys averages projected values") {
  std::mt19937_64 rng(3);
  ParamStore store;
  init_attention(store, "att", 8, rng);
  Graph g(false);
  Tensor key_row = random_matrix(1, 8, rng);
  Tensor keys = Tensor::matrix(5, 8);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 8; ++j) keys(i, j) = key_row[j];
  Var q = g.constant(random_matrix(3, 8, rng));
  Var k = g.constant(keys);
  Var v = g.constant(random_matrix(5, 8, rng));
  Var out = multi_head_attention(g, store, "att", q, k, v, 2);
  CHECK(out.rows() == 3);
  CHECK(out.cols() == 8);

  // Projected value mean: o(mean(v W_v + b_v)).
  Var vmean = mean_rows(linear(g, store, "att.v", v));
  Var expected = linear(g, store, "att.o", vmean);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 8; ++j)
      CHECK(std::abs(out.value()(i, j) - expected.value()[j]) < 1e-10);
}

TEST_CASE("attention over a single key returns that value's projection") {
  std::mt19937_64 rng(4);
  ParamStore store;
  init_attention(store, "att", 4, rng);
  Graph g(false);
  Var v = g.constant(random_matrix(1, 4, rng));
  Var out = multi_head_attention(g, store, "att", g.constant(random_matrix(6, 4, rng)),
                                 g.constant(random_matrix(1, 4, rng)), v, 2);
  Var expected = linear(g, store, "att.o", linear(g, store, "att.v", v));
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      CHECK(std::abs(out.value()(i, j) - expected.value()[j]) < 1e-12);
}

TEST_CASE("attention shape contract and errors") {
  std::mt19937_64 rng(5);
  ParamStore store;
  init_attention(store, "att", 8, rng);
  Graph g(false);
  Var q = g.constant(random_matrix(3, 8, rng));
  Var kv = g.constant(random_matrix(5, 8, rng));
  Var out = multi_head_attention(g, store, "att", q, kv, kv, 2);
  CHECK(out.rows() == 3);
  CHECK(out.cols() == 8);
  CHECK_THROWS_AS(multi_head_attention(g, store, "att", q, kv, kv, 3), ShapeError);
  Var short_v = g.constant(random_matrix(4, 8, rng));
  CHECK_THROWS_AS(multi_head_attention(g, store, "att", q, kv, short_v, 2), ShapeError);
}

TEST_CASE("grad_check on closed-form functions") {
  ParamStore store;
  store.add("theta", Tensor::scalar(3.0));
  auto quad = [](Graph& g, ParamStore& s) { return square(g.param(s, "theta")); };
  auto report = grad_check(quad, store, 1e-4);
  REQUIRE(report.entries.size() == 1);
  CHECK(store.grad("theta")[0] == doctest::Approx(6.0));
  CHECK(report.max_rel_error() < 1e-8);
  CHECK(store.value("theta")[0] == 3.0);

  auto constant = [](Graph& g, ParamStore& s) {
    return add_const(scale(g.param(s, "theta"), 0.0), 2.0);
  };
  auto flat = grad_check(constant, store, 1e-4);
  CHECK(flat.max_rel_error() == 0.0);

  auto broken = [](Graph& g, ParamStore& s) {
    return add_const(g.param(s, "theta"), std::numeric_limits<double>::infinity());
  };
  CHECK_THROWS_AS(grad_check(broken, store), NumericError);
}

namespace {

using UnaryBuilder = std::function<Var(Graph&, Var, ParamStore&)>;

// sum(R .* op(x)) for a fixed random R, so every output entry is weighted.
double check_op(const UnaryBuilder& op, std::size_t r, std::size_t c, std::uint64_t seed,
                double positive_shift = 0.0) {
  std::mt19937_64 rng(seed);
  ParamStore store;
  Tensor x = random_matrix(r, c, rng);
  if (positive_shift > 0.0)
    for (double& v : x.data()) v = std::abs(v) + positive_shift;
  store.add("x", x);
  store.add("aux", random_matrix(c, c, rng));
  store.add("row", random_matrix(1, c, rng));
  store.add("s", Tensor::scalar(0.5 + std::abs(random_matrix(1, 1, rng)[0])));
  Graph probe(false);
  const Tensor shape_probe = op(probe, probe.param(store, "x"), store).value();
  const Tensor weights = random_matrix(shape_probe.rows(), shape_probe.cols(), rng);
  auto loss = [&](Graph& g, ParamStore& s) {
    return sum(hadamard(op(g, g.param(s, "x"), s), g.constant(weights)));
  };
  return grad_check(loss, store, 1e-5).max_rel_error();
}

}  // namespace

TEST_CASE("every differentiable op passes grad_check on 20 seeds") {
  const std::vector<std::pair<std::string, UnaryBuilder>> ops = {
      {"matmul", [](Graph& g, Var x, ParamStore& s) { return matmul(x, g.param(s, "aux")); }},
      {"transpose", [](Graph&, Var x, ParamStore&) { return transpose(x); }},
      {"add", [](Graph&, Var x, ParamStore&) { return x + square(x); }},
      {"sub", [](Graph&, Var x, ParamStore&) { return x - tanh(x); }},
      {"hadamard", [](Graph&, Var x, ParamStore&) { return hadamard(x, sigmoid(x)); }},
      {"scale", [](Graph&, Var x, ParamStore&) { return add_const(scale(x, -1.7), 0.3); }},
      {"mul_scalar",
       [](Graph& g, Var x, ParamStore& s) { return mul_scalar(x, g.param(s, "s")); }},
      {"add_scalar",
       [](Graph& g, Var x, ParamStore& s) { return square(add_scalar(x, g.param(s, "s"))); }},
      {"div_scalar",
       [](Graph& g, Var x, ParamStore& s) { return div_scalar(x, g.param(s, "s")); }},
      {"add_row",
       [](Graph& g, Var x, ParamStore& s) { return square(add_row(x, g.param(s, "row"))); }},
      {"mul_row", [](Graph& g, Var x, ParamStore& s) { return mul_row(x, g.param(s, "row")); }},
      {"exp", [](Graph&, Var x, ParamStore&) { return exp(x); }},
      {"tanh", [](Graph&, Var x, ParamStore&) { return tanh(x); }},
      {"sigmoid", [](Graph&, Var x, ParamStore&) { return sigmoid(x); }},
      {"softplus", [](Graph&, Var x, ParamStore&) { return softplus(x); }},
      {"gelu", [](Graph&, Var x, ParamStore&) { return gelu(x); }},
      {"mean", [](Graph&, Var x, ParamStore&) { return square(mean(x)); }},
      {"mean_rows", [](Graph&, Var x, ParamStore&) { return square(mean_rows(x)); }},
      {"sum_cols", [](Graph&, Var x, ParamStore&) { return square(sum_cols(x)); }},
      {"softmax_rows", [](Graph&, Var x, ParamStore&) { return softmax_rows(x); }},
      {"log_softmax_rows", [](Graph&, Var x, ParamStore&) { return log_softmax_rows(x); }},
      {"layer_norm",
       [](Graph& g, Var x, ParamStore& s) {
         return layer_norm_rows(x, g.param(s, "row"), square(g.param(s, "row")));
       }},
      {"normalize_rows", [](Graph&, Var x, ParamStore&) { return normalize_rows(x); }},
      {"pairwise_sq_dist",
       [](Graph& g, Var x, ParamStore& s) { return pairwise_sq_dist(x, g.param(s, "aux")); }},
      {"concat_cols", [](Graph&, Var x, ParamStore&) { return concat_cols({x, tanh(x)}); }},
      {"concat_rows", [](Graph&, Var x, ParamStore&) { return concat_rows({x, square(x)}); }},
      {"slice_rows",
       [](Graph&, Var x, ParamStore&) { return square(slice_rows(x, 1, x.rows())); }},
      {"slice_cols", [](Graph&, Var x, ParamStore&) { return square(slice_cols(x, 0, 2)); }},
      {"select_cols",
       [](Graph&, Var x, ParamStore&) { return square(select_cols(x, {2, 0, 0, 1})); }},
      {"unfold_rows", [](Graph&, Var x, ParamStore&) { return square(unfold_rows(x, 3)); }},
  };
  for (const auto& [name, op] : ops) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const std::size_t r = 2 + seed % 4, c = 3 + seed % 3;
      const double err = check_op(op, r, c, 1000 + seed);
      INFO(name << " seed " << seed);
      CHECK(err < 1e-4);
    }
  }
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const double err = check_op([](Graph&, Var x, ParamStore&) { return log(x); }, 3, 4,
                                2000 + seed, 0.5);
    CHECK(err < 1e-4);
  }
}

TEST_CASE("attention and conv blocks pass grad_check") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    ParamStore store;
    init_attention(store, "att", 4, rng);
    init_conv1d(store, "conv", 4, 4, 3, rng);
    init_layer_norm(store, "ln", 4);
    const Tensor q = random_matrix(3, 4, rng), kv = random_matrix(4, 4, rng);
    const Tensor w = random_matrix(3, 4, rng);
    auto loss = [&](Graph& g, ParamStore& s) {
      Var x = conv1d(g, s, "conv", g.constant(kv), 3);
      Var att = multi_head_attention(g, s, "att", g.constant(q), x, x, 2);
      return sum(hadamard(layer_norm(g, s, "ln", gelu(att)), g.constant(w)));
    };
    auto report = grad_check(loss, store, 1e-5);
    INFO("worst " << report.worst()->name);
    CHECK(report.max_rel_error() < 1e-4);
  }
}

TEST_CASE("ops are bitwise deterministic") {
  auto run = [] {
    std::mt19937_64 rng(77);
    ParamStore store;
    init_attention(store, "att", 8, rng);
    Graph g(true);
    Var x = g.constant(random_matrix(6, 8, rng));
    Var y = multi_head_attention(g, store, "att", x, x, x, 4);
    Var loss = sum(square(y));
    g.backward(loss);
    return std::make_pair(y.value(), store.grad("att.q.w"));
  };
  auto a = run();
  auto b = run();
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
}

TEST_CASE("param store iterates in sorted order") {
  ParamStore store;
  store.add("zeta", Tensor::scalar(1.0));
  store.add("alpha", Tensor::scalar(2.0));
  store.add("mid", Tensor::matrix(2, 2));
  CHECK(store.names() == std::vector<std::string>{"alpha", "mid", "zeta"});
  CHECK(store.scalar_count() == 6);
  CHECK(store.grad("mid").shape() == store.value("mid").shape());
  CHECK_THROWS_AS(store.value("missing"), ArgumentError);
}

TEST_CASE("shape errors are raised") {
  Graph g(false);
  Var a = g.constant(Tensor::matrix(2, 3));
  Var b = g.constant(Tensor::matrix(2, 2));
  CHECK_THROWS_AS(matmul(a, a), ShapeError);
  CHECK_THROWS_AS(a + b, ShapeError);
  CHECK_THROWS_AS(add_row(a, b), ShapeError);
}
