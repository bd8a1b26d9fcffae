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

#include "cmarr/alignment/alignment.hpp"
#include "cmarr/error.hpp"
#include "cmarr/numcore/ops.hpp"

namespace cmarr {

namespace {

void require_same_dim(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) {
    throw ShapeError("gaussian embeddings differ in dimension: " + std::to_string(a.size()) +
                     " vs " + std::to_string(b.size()));
  }
}

Tensor identity(std::size_t n) {
  Tensor eye = Tensor::matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) eye(i, i) = 1.0;
  return eye;
}

GaussianVars stack(Graph& g, std::span<const GaussianEmb> embs) {
  std::vector<Var> mus, vars;
  for (const auto& e : embs) {
    mus.push_back(g.constant(Tensor({1, e.mu.size()}, {e.mu.data().begin(), e.mu.data().end()})));
    vars.push_back(
        g.constant(Tensor({1, e.var.size()}, {e.var.data().begin(), e.var.data().end()})));
  }
  return {concat_rows(mus), concat_rows(vars)};
}

}  // namespace

double wasserstein2(const GaussianEmb& g1, const GaussianEmb& g2) {
  require_same_dim(g1.mu, g2.mu);
  require_same_dim(g1.var, g2.var);
  require_same_dim(g1.mu, g1.var);
  double d = 0.0;
  for (std::size_t i = 0; i < g1.mu.size(); ++i) {
    const double dm = g1.mu[i] - g2.mu[i];
    const double dv = g1.var[i] - g2.var[i];
    d += dm * dm + dv * dv;
  }
  return d;
}

double similarity(const GaussianEmb& g1, const GaussianEmb& g2, double a, double b) {
  return a * wasserstein2(g1, g2) + b;
}

Var similarity_matrix(const GaussianVars& lhs, const GaussianVars& rhs, Var a, Var b) {
  Var d = pairwise_sq_dist(lhs.mu, rhs.mu) + pairwise_sq_dist(lhs.var, rhs.var);
  return add_scalar(mul_scalar(d, a), b);
}

Var infonce_from_similarity(Var sim, Var tau) {
  const std::size_t n = sim.rows();
  if (n == 0 || sim.cols() != n) {
    throw ArgumentError("InfoNCE needs a square similarity matrix with matched pairs");
  }
  Graph& g = sim.graph();
  Var logits = div_scalar(sim, tau);
  Var eye = g.constant(identity(n));
  const double inv_n = 1.0 / static_cast<double>(n);
  Var a2b = scale(sum(hadamard(log_softmax_rows(logits), eye)), -inv_n);
  Var b2a = scale(sum(hadamard(log_softmax_rows(transpose(logits)), eye)), -inv_n);
  return a2b + b2a;
}

Var infonce_pair_loss(const GaussianVars& lhs, const GaussianVars& rhs, Var tau, Var a,
                      Var b) {
  if (lhs.mu.rows() != rhs.mu.rows()) {
    throw ArgumentError("InfoNCE batches differ in size: " + std::to_string(lhs.mu.rows()) +
                        " vs " + std::to_string(rhs.mu.rows()));
  }
  return infonce_from_similarity(similarity_matrix(lhs, rhs, a, b), tau);
}

double infonce_pair_loss(std::span<const GaussianEmb> lhs, std::span<const GaussianEmb> rhs,
                         double tau, double a, double b) {
  if (lhs.size() != rhs.size()) throw ArgumentError("InfoNCE batches differ in size");
  if (lhs.empty()) throw ArgumentError("InfoNCE needs at least one pair");
  Graph g(false);
  Var loss = infonce_pair_loss(stack(g, lhs), stack(g, rhs), g.constant(Tensor::scalar(tau)),
                               g.constant(Tensor::scalar(a)), g.constant(Tensor::scalar(b)));
  return loss.value()[0];
}

Var udcl_loss(const GaussianVars& s, const GaussianVars& v, const GaussianVars& t, Var tau,
              Var a, Var b) {
  if (s.mu.rows() != v.mu.rows() || s.mu.rows() != t.mu.rows()) {
    throw ArgumentError("udcl_loss: modality batches differ in size");
  }
  return infonce_pair_loss(s, t, tau, a, b) + infonce_pair_loss(t, v, tau, a, b) +
         infonce_pair_loss(s, v, tau, a, b);
}

Var point_infonce_pair_loss(Var lhs, Var rhs, Var tau) {
  if (lhs.rows() != rhs.rows()) throw ArgumentError("InfoNCE batches differ in size");
  Var cos = matmul(normalize_rows(lhs), transpose(normalize_rows(rhs)));
  return infonce_from_similarity(cos, tau);
}

}  // namespace cmarr
