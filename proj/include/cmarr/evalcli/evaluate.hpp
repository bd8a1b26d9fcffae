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
#include <span>
#include <string>
#include <vector>

#include "cmarr/data/dataset.hpp"
#include "cmarr/trainer/model.hpp"
#include "cmarr/trainer/trainer.hpp"

namespace cmarr {

struct ConditionRow {
  std::string condition;  // "{t}", ..., "Avg.", "{s,v,t}"
  double war = 0.0;
  double uar = 0.0;
};

/// Six proper subsets in report order, then "Avg." over them, then full modality.
struct ConditionReport {
  std::vector<ConditionRow> rows;

  const ConditionRow& row(const std::string& condition) const;
  const ConditionRow& average() const { return rows.at(6); }
  const ConditionRow& full() const { return rows.at(7); }
};

ConditionReport evaluate_conditions(Model& model, const Dataset& dataset,
                                    std::span<const std::size_t> indices);

/// Tab-separated with a header row; values printed with 17 significant digits.
std::string report_to_tsv(const ConditionReport& report);

/// Mean squared per-element error of recovered sequences against the model's own
/// projections of the ground truth, over every missing modality of every
/// proper-subset condition.
struct ReconstructionErrors {
  double model = 0.0;
  double zero_fill = 0.0;
  double mean_fill = 0.0;  // per-modality mean projected sequence over `reference`
};

ReconstructionErrors reconstruction_errors(Model& model, const Dataset& dataset,
                                           std::span<const std::size_t> indices,
                                           std::span<const std::size_t> reference);

/// The ablation variants in table order.
const std::vector<std::string>& ablation_variants();
TrainConfig variant_config(const TrainConfig& base, const std::string& variant);

/// Test-split outcome of one trained model. In fold mode the numbers are
/// macro-averaged over folds.
struct RunOutcome {
  ConditionReport report;
  ReconstructionErrors reconstruction;
};

RunOutcome train_and_evaluate(const TrainConfig& config, const Dataset& dataset);

struct AblationRow {
  std::string variant;
  std::uint64_t seed = 0;
  double avg_war = 0.0, avg_uar = 0.0, full_war = 0.0, full_uar = 0.0;
  ReconstructionErrors reconstruction;
};

/// Every variant trained with seeds config.seed, ..., config.seed + seeds - 1.
std::vector<AblationRow> run_ablation(const TrainConfig& config, const Dataset& dataset,
                                      std::size_t seeds);
/// One row per variant, averaged over its seeds (seed field = number of seeds).
std::vector<AblationRow> mean_by_variant(const std::vector<AblationRow>& rows);
/// `seed_column` names the seed field ("seeds" for averaged tables).
std::string ablation_to_tsv(const std::vector<AblationRow>& rows,
                           const std::string& seed_column = "seed");

struct SweepRow {
  std::string param;
  double value = 0.0;
  double avg_war = 0.0, avg_uar = 0.0, full_war = 0.0, full_uar = 0.0;
};

/// Trains once per value of `param` (alpha, beta, lambda or gamma).
std::vector<SweepRow> run_sweep(const TrainConfig& config, const Dataset& dataset,
                                const std::string& param, std::span<const double> values);
std::string sweep_to_tsv(const std::vector<SweepRow>& rows);

/// Mean Euclidean distance between each modality's pooled ground-truth projection
/// and its pooled reconstruction from the other two, over `indices` and modalities.
double embedding_gap(Model& model, const Dataset& dataset, std::span<const std::size_t> indices);

/// Writes pooled ground-truth and reconstructed-from-others vectors for every
/// instance and modality. Returns the number of data rows.
std::size_t export_embeddings(Model& model, const Dataset& dataset,
                              std::span<const std::size_t> indices, const std::string& path);

}  // namespace cmarr
