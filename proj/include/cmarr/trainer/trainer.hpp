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
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "cmarr/data/dataset.hpp"
#include "cmarr/trainer/model.hpp"
#include "cmarr/trainer/optimizer.hpp"

namespace cmarr {

struct Checkpoint {
  Model model;
  Adam optimizer;
  std::size_t epoch = 0;
  std::mt19937_64 mask_rng;
};

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
/// Throws FormatError on malformed content or a config hash mismatch.
Checkpoint load_checkpoint(const std::string& path);

/// Forward, backward and one optimizer step on `batch` (masks already filled).
LossValues train_step(Model& model, Adam& optimizer, const Dataset& dataset, const Batch& batch);

/// Fills batch.masks from the training policy (always full for the baseline).
void assign_masks(Batch& batch, const TrainConfig& config, std::mt19937_64& rng);

Split split_for(const TrainConfig& config, const Dataset& dataset);

struct EpochRecord {
  std::size_t epoch = 0;
  LossValues losses;  // means over the epoch's steps
  double val_war = 0.0;
  double val_uar = 0.0;
};

std::string log_header();
std::string log_line(const EpochRecord& record);

struct StepInfo {
  std::size_t epoch = 0;
  std::size_t step = 0;  // global, starting at 1
  const LossValues& losses;
  Model& model;
};

struct TrainOptions {
  std::string log_path;         // per-epoch TSV, optional
  std::string checkpoint_path;  // best checkpoint, rewritten on improvement, optional
  std::function<void(const StepInfo&)> on_step;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  Checkpoint best;  // highest full-modality validation UAR
  Checkpoint last;
  std::vector<EpochRecord> log;
  Split split;
};

TrainResult train(const TrainConfig& config, const Dataset& dataset,
                  const TrainOptions& options = {});

}  // namespace cmarr
