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

#include "cmarr/error.hpp"
#include "cmarr/numcore/ops.hpp"
#include "cmarr/refine_fuse/refine_fuse.hpp"

namespace cmarr {

SpclResult spcl_loss(Var reps, const std::vector<std::size_t>& labels,
                     const std::vector<std::size_t>& instance_ids, double tau2) {
  const std::size_t n = reps.rows();
  if (labels.size() != n || instance_ids.size() != n) {
    throw ArgumentError("spcl_loss: labels and instance ids must match the pool size");
  }
  if (!(tau2 > 0.0)) throw ArgumentError("spcl_loss: temperature must be positive");

  SpclResult result;
  std::vector<std::size_t> positives(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && labels[j] == labels[i] && instance_ids[j] != instance_ids[i]) ++positives[i];
    }
    if (positives[i] > 0) ++result.anchors;
    else ++result.skipped_anchors;
  }
  if (result.anchors == 0) throw ArgumentError("spcl_loss: no anchor has a positive");

  // Self-similarity is pushed out of the softmax with a large finite offset.
  Tensor self_mask = Tensor::matrix(n, n);
  Tensor weights = Tensor::matrix(n, n);
  const double per_anchor = 1.0 / static_cast<double>(result.anchors);
  for (std::size_t i = 0; i < n; ++i) {
    self_mask(i, i) = -1e30;
    if (positives[i] == 0) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && labels[j] == labels[i] && instance_ids[j] != instance_ids[i]) {
        weights(i, j) = per_anchor / static_cast<double>(positives[i]);
      }
    }
  }
  Graph& g = reps.graph();
  Var unit = normalize_rows(reps);
  Var logits = scale(matmul(unit, transpose(unit)), 1.0 / tau2) + g.constant(std::move(self_mask));
  result.loss = neg(sum(hadamard(log_softmax_rows(logits), g.constant(std::move(weights)))));
  return result;
}

}  // namespace cmarr
