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

#include <cstdint>
#include <string>

#include "cmarr/alignment/alignment.hpp"
#include "cmarr/data/dataset.hpp"
#include "cmarr/data/modality.hpp"
#include "cmarr/flow/flow.hpp"
#include "cmarr/refine_fuse/refine_fuse.hpp"

namespace cmarr {

struct TrainConfig {
  // Loss weights.
  double alpha = 0.1;
  double beta = 0.1;
  double lambda = 10.0;
  double gamma = 1.0;
  double tau2 = 0.1;

  double learning_rate = 1e-3;
  double weight_decay = 1.0;  // decoupled, weight matrices only
  std::size_t batch_size = 16;
  std::size_t epochs = 30;
  std::uint64_t seed = 0;
  MissingPolicy missing_policy;

  // Ablation switches.
  bool disable_udcl = false;
  bool disable_spcl = false;
  bool no_attention = false;
  bool point_alignment = false;
  bool baseline = false;

  // 0 selects the stratified split; >= 3 enables k-fold mode.
  std::size_t folds = 0;
  std::size_t fold = 0;

  // Architecture.
  UmcSpec umc;
  FlowSpec flow;
  std::size_t fusion_heads = 2;
  bool third_block = false;
  bool fusion_residual = true;
  std::size_t classifier_hidden = 64;

  // Synthetic data generation (gen-data).
  SyntheticConfig data;
  std::uint64_t data_seed = 0;

  void validate() const;

  FusionSpec fusion_spec(std::size_t num_classes) const;
  double effective_alpha() const { return disable_udcl || baseline ? 0.0 : alpha; }
  double effective_beta() const { return disable_spcl || baseline ? 0.0 : beta; }
  double effective_lambda() const { return baseline ? 0.0 : lambda; }
  double effective_gamma() const { return baseline ? 0.0 : gamma; }
};

/// Parses `key = value` lines; `#` starts a comment. Keys absent from the text
/// keep the values already in `base`.
TrainConfig parse_config(const std::string& text, TrainConfig base = {});
TrainConfig load_config(const std::string& path);
/// Canonical text form; parse_config(config_to_text(c)) reproduces c.
std::string config_to_text(const TrainConfig& config);
/// 64-bit FNV-1a over the canonical text, as 16 hex digits.
std::string config_hash(const TrainConfig& config);

/// Sets one key from its text value.
void set_config_value(TrainConfig& config, const std::string& key, const std::string& value);

}  // namespace cmarr
