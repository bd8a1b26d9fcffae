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
#include <vector>

#include "cmarr/data/dataset.hpp"
#include "cmarr/numcore/graph.hpp"
#include "cmarr/numcore/param_store.hpp"
#include "cmarr/trainer/config.hpp"

namespace cmarr {

struct Model {
  TrainConfig config;
  std::size_t num_classes = 0;
  std::array<std::size_t, 3> dims{};
  ParamStore store;

  FusionSpec fusion() const { return config.fusion_spec(num_classes); }
};

/// Fresh parameters for every phase the configuration uses, seeded by config.seed.
Model init_model(const TrainConfig& config, std::size_t num_classes,
                 std::array<std::size_t, 3> dims);

/// Per-instance streams under one availability mask.
struct InstancePass {
  std::array<Var, 3> projected;  // available modalities only
  std::array<Var, 3> final;      // projected, or recovered for missing modalities
  std::array<Var, 3> latent;     // available modalities only
  std::array<Var, 3> logdet;
};

/// Projected sequences of all three modalities, held fixed as data: the flows read
/// them as inputs and the reconstruction loss as targets, so neither sends
/// gradient back into the encoders.
using FrozenProjections = std::array<Tensor, 3>;

FrozenProjections frozen_projections(Model& model, const Instance& instance);
std::vector<FrozenProjections> frozen_projections(Model& model, const Dataset& dataset,
                                                  const Batch& batch);

/// Encodes the available modalities of `instance` and recovers the rest. Features
/// of missing modalities are never read. `frozen` (optional) supplies the flow
/// inputs; otherwise they are the current projections.
InstancePass run_instance(Graph& g, Model& model, const Instance& instance, ModalityMask mask,
                          const FrozenProjections* frozen = nullptr);

/// Loss components for one batch; components that do not apply are left invalid.
struct LossTerms {
  Var udcl, spcl, rec, cls, nll;
};

struct LossValues {
  double udcl = 0, spcl = 0, rec = 0, cls = 0, nll = 0, total = 0;
};

/// Full training forward pass. Ground-truth features of masked modalities only
/// serve as reconstruction targets and as alignment inputs. `frozen` (one entry
/// per batch instance) defaults to the current projections.
LossTerms forward_losses(Graph& g, Model& model, const Dataset& dataset, const Batch& batch,
                         const std::vector<FrozenProjections>* frozen = nullptr);

/// alpha*udcl + beta*spcl + lambda*rec + cls + gamma*nll with the configuration's
/// effective weights. Zero-weight and absent terms are skipped.
Var total_loss(const LossTerms& terms, const TrainConfig& config);
double total_loss(const LossValues& values, const TrainConfig& config);
LossValues loss_values(const LossTerms& terms, Var total);

/// Class logits (one row per instance) under the given masks.
Tensor predict_logits(Model& model, const Dataset& dataset, std::span<const std::size_t> indices,
                      std::span<const ModalityMask> masks);
std::vector<std::size_t> predict(Model& model, const Dataset& dataset,
                                 std::span<const std::size_t> indices, ModalityMask mask);

}  // namespace cmarr
