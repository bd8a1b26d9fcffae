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

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cmarr/data/modality.hpp"
#include "cmarr/numcore/tensor.hpp"

namespace cmarr {

/// One utterance. Ground truth for every modality is always present; missing
/// modalities are simulated with masks.
struct Instance {
  std::string id;
  std::array<Tensor, 3> features;  // indexed by index_of(Modality), each T x d
  std::size_t label = 0;

  const Tensor& feature(Modality m) const { return features[index_of(m)]; }
  friend bool operator==(const Instance&, const Instance&) = default;
};

struct Dataset {
  std::vector<Instance> instances;
  std::vector<std::string> class_names;
  std::array<std::size_t, 3> dims{};     // per-modality frame width
  std::array<std::size_t, 3> lengths{};  // nominal sequence lengths

  std::size_t num_classes() const { return class_names.size(); }
  std::size_t size() const { return instances.size(); }

  // Labels in range, non-empty sequences, per-modality width constant.
  void validate() const;
  // At least two classes with two or more instances each.
  void require_contrastive_positives() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

std::vector<std::string> default_class_names(std::size_t num_classes);

struct SyntheticConfig {
  std::size_t num_classes = 4;
  std::size_t n_per_class = 100;
  std::array<std::size_t, 3> dims = {16, 16, 16};
  std::array<std::size_t, 3> lengths = {12, 10, 8};
  std::size_t semantic_dim = 8;
  std::size_t emotion_dim = 4;
  double noise_std = 0.5;
  double emotion_jitter = 0.4;
  std::array<double, 3> modality_strengths = {1.0, 0.3, 1.0};
};

/// Each instance draws a semantic vector shared by its modalities and an
/// emotion vector (class prototype plus jitter). Frame k of modality m is
/// W_m [semantic ; strength_m * emotion ; pos(k)] + noise, with W_m a fixed
/// random map per modality. Values are rounded to float32 so the file format
/// stores them exactly.
Dataset generate_synthetic(const SyntheticConfig& config, std::uint64_t seed);

/// Dataset directory: manifest.tsv, classes.txt and one .f32 file per
/// modality per instance.
void save_dataset(const Dataset& dataset, const std::string& dir);
Dataset load_dataset(const std::string& dir);

struct Batch {
  std::vector<std::size_t> indices;  // into Dataset::instances
  std::vector<ModalityMask> masks;   // per instance, filled by the trainer
};

/// Splits `indices` into consecutive batches of `batch_size`; a trailing batch
/// shorter than two is merged into the previous one.
std::vector<Batch> make_batches(std::span<const std::size_t> indices,
                                std::size_t batch_size, std::uint64_t seed, bool shuffle);
std::vector<Batch> make_batches(const Dataset& dataset, std::size_t batch_size,
                                std::uint64_t seed, bool shuffle);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

/// Seeded stratified 70/15/15 split.
Split stratified_split(const Dataset& dataset, std::uint64_t seed);
/// Stratified k folds: `fold` is the test fold, the next one validation.
Split kfold_split(const Dataset& dataset, std::size_t folds, std::size_t fold,
                  std::uint64_t seed);

}  // namespace cmarr
