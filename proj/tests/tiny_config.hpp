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

#include "cmarr/trainer/config.hpp"

namespace cmarr::testing {

// A model and dataset small enough for finite-difference checks and quick runs.
inline TrainConfig tiny_config() {
  TrainConfig c;
  c.umc.width = 8;
  c.umc.hidden = 8;
  c.umc.embed_dim = 4;
  c.flow.channels = 4;
  c.flow.length = 4;
  c.flow.coupling_layers = 2;
  c.flow.coupling_hidden = 6;
  c.flow.refine_blocks = 1;
  c.flow.attention_reduction = 2;
  c.classifier_hidden = 6;
  c.data.num_classes = 2;
  c.data.n_per_class = 10;
  c.data.dims = {6, 5, 7};
  c.data.lengths = {5, 4, 3};
  c.data.semantic_dim = 3;
  c.data.emotion_dim = 2;
  c.batch_size = 4;
  c.epochs = 1;
  return c;
}

}  // namespace cmarr::testing
