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
#include <vector>

#include "cmarr/numcore/graph.hpp"
#include "cmarr/numcore/nn.hpp"
#include "cmarr/numcore/param_store.hpp"

namespace cmarr {

struct SpclResult {
  Var loss;
  std::size_t anchors = 0;          // anchors with at least one positive
  std::size_t skipped_anchors = 0;  // anchors without positives
};

/// Supervised contrastive loss over a pool of pooled representations (one row
/// each). Positives of anchor i share its label and come from a different
/// instance; the softmax denominator runs over every k != i. Similarity is
/// cosine / tau2.
SpclResult spcl_loss(Var reps, const std::vector<std::size_t>& labels,
                     const std::vector<std::size_t>& instance_ids, double tau2);

struct FusionSpec {
  std::size_t channels = 16;  // d_c of each input sequence
  std::size_t heads = 2;
  bool attention = true;      // false: mean-pooled concatenation
  bool third_block = false;   // adds a speech->video cross-attention block
  bool residual = true;       // each attention block adds its query back
  std::size_t classifier_hidden = 64;
  std::size_t num_classes = 4;
};

std::size_t fused_width(const FusionSpec& spec);

void init_fusion(ParamStore& store, const FusionSpec& spec, Rng& rng);
/// Text-like sequence queries video-like and speech-like sequences; the
/// concatenated outputs pass through self-attention and are mean-pooled to a
/// single 1 x fused_width(spec) vector.
Var fuse(Graph& g, ParamStore& store, const FusionSpec& spec, Var text_like, Var speech_like,
         Var video_like);

void init_classifier(ParamStore& store, const FusionSpec& spec, Rng& rng);
/// Two-layer gelu MLP; rows of `fused` are instances, result is N x C logits.
Var classify(Graph& g, ParamStore& store, Var fused);
/// Mean softmax cross-entropy.
Var cls_loss(Var logits, const std::vector<std::size_t>& labels);

}  // namespace cmarr
