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

std::size_t fused_width(const FusionSpec& spec) {
  if (!spec.attention) return 3 * spec.channels;
  return (spec.third_block ? 3 : 2) * spec.channels;
}

void init_fusion(ParamStore& store, const FusionSpec& spec, Rng& rng) {
  if (!spec.attention) return;
  init_attention(store, "fuse.tv", spec.channels, rng);
  init_attention(store, "fuse.ts", spec.channels, rng);
  if (spec.third_block) init_attention(store, "fuse.sv", spec.channels, rng);
  init_attention(store, "fuse.self", fused_width(spec), rng);
}

Var fuse(Graph& g, ParamStore& store, const FusionSpec& spec, Var text_like, Var speech_like,
         Var video_like) {
  for (Var x : {text_like, speech_like, video_like}) {
    if (x.cols() != spec.channels) throw ShapeError("fuse: channel count mismatch");
  }
  if (text_like.rows() != speech_like.rows() || text_like.rows() != video_like.rows()) {
    throw ShapeError("fuse: sequence lengths differ");
  }
  if (!spec.attention) return mean_rows(concat_cols({text_like, speech_like, video_like}));

  auto block = [&](const char* prefix, Var q, Var kv) {
    Var h = multi_head_attention(g, store, prefix, q, kv, kv, spec.heads);
    return spec.residual ? q + h : h;
  };
  std::vector<Var> parts = {block("fuse.tv", text_like, video_like),
                            block("fuse.ts", text_like, speech_like)};
  if (spec.third_block) parts.push_back(block("fuse.sv", speech_like, video_like));
  Var joined = concat_cols(parts);
  Var self = block("fuse.self", joined, joined);
  return mean_rows(self);
}

void init_classifier(ParamStore& store, const FusionSpec& spec, Rng& rng) {
  init_linear(store, "cls.l1", fused_width(spec), spec.classifier_hidden, rng);
  init_linear(store, "cls.l2", spec.classifier_hidden, spec.num_classes, rng);
}

Var classify(Graph& g, ParamStore& store, Var fused) {
  return linear(g, store, "cls.l2", gelu(linear(g, store, "cls.l1", fused)));
}

Var cls_loss(Var logits, const std::vector<std::size_t>& labels) {
  const std::size_t n = logits.rows(), c = logits.cols();
  if (labels.size() != n) throw ArgumentError("cls_loss: one label per row required");
  Tensor onehot = Tensor::matrix(n, c);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] >= c) {
      throw ArgumentError("cls_loss: label " + std::to_string(labels[i]) + " outside " +
                          std::to_string(c) + " classes");
    }
    onehot(i, labels[i]) = 1.0 / static_cast<double>(n);
  }
  return neg(sum(hadamard(log_softmax_rows(logits), logits.graph().constant(std::move(onehot)))));
}

}  // namespace cmarr
