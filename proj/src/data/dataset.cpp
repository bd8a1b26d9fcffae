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

#include "cmarr/data/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <random>

#include "cmarr/error.hpp"

namespace cmarr {

std::vector<std::string> default_class_names(std::size_t num_classes) {
  static const std::vector<std::string> kNames = {"ang", "hap", "neu", "sad"};
  std::vector<std::string> out;
  for (std::size_t c = 0; c < num_classes; ++c) {
    out.push_back(c < kNames.size() ? kNames[c] : "class" + std::to_string(c));
  }
  return out;
}

void Dataset::validate() const {
  const std::size_t c = num_classes();
  for (const Instance& inst : instances) {
    if (inst.label >= c) {
      throw ArgumentError("instance '" + inst.id + "' has label " +
                          std::to_string(inst.label) + " outside " + std::to_string(c) +
                          " classes");
    }
    for (Modality m : kAllModalities) {
      const Tensor& f = inst.feature(m);
      if (f.rows() == 0) {
        throw ArgumentError("instance '" + inst.id + "' has an empty " + short_name(m) +
                            " sequence");
      }
      if (f.cols() != dims[index_of(m)]) {
        throw ArgumentError("instance '" + inst.id + "' " + short_name(m) + " width " +
                            std::to_string(f.cols()) + " differs from dataset width " +
                            std::to_string(dims[index_of(m)]));
      }
    }
  }
}

void Dataset::require_contrastive_positives() const {
  std::map<std::size_t, std::size_t> counts;
  for (const Instance& inst : instances) ++counts[inst.label];
  std::size_t usable = 0;
  for (const auto& [label, n] : counts)
    if (n >= 2) ++usable;
  if (usable < 2) {
    throw ArgumentError("dataset needs at least two classes with two or more instances");
  }
}

Dataset generate_synthetic(const SyntheticConfig& config, std::uint64_t seed) {
  if (config.num_classes < 2) throw ArgumentError("synthetic data needs at least 2 classes");
  if (config.n_per_class < 1 || config.semantic_dim < 1 || config.emotion_dim < 1) {
    throw ArgumentError("synthetic counts must be at least 1");
  }
  for (std::size_t i = 0; i < 3; ++i) {
    if (config.dims[i] < 1 || config.lengths[i] < 1) {
      throw ArgumentError("synthetic dims and lengths must be at least 1");
    }
  }
  if (config.noise_std < 0.0 || config.emotion_jitter < 0.0) {
    throw ArgumentError("noise_std and emotion_jitter must be non-negative");
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  constexpr std::size_t kPosDim = 2;
  const std::size_t latent = config.semantic_dim + config.emotion_dim + kPosDim;

  std::array<Tensor, 3> maps;
  for (std::size_t m = 0; m < 3; ++m) {
    maps[m] = Tensor::matrix(config.dims[m], latent);
    const double sd = 1.0 / std::sqrt(static_cast<double>(latent));
    for (double& v : maps[m].data()) v = sd * normal(rng);
  }
  std::vector<std::vector<double>> prototypes(config.num_classes,
                                              std::vector<double>(config.emotion_dim));
  for (auto& p : prototypes)
    for (double& v : p) v = normal(rng);

  Dataset ds;
  ds.class_names = default_class_names(config.num_classes);
  ds.dims = config.dims;
  ds.lengths = config.lengths;

  std::vector<double> z(latent);
  for (std::size_t c = 0; c < config.num_classes; ++c) {
    for (std::size_t i = 0; i < config.n_per_class; ++i) {
      Instance inst;
      char id[32];
      std::snprintf(id, sizeof(id), "syn%05zu", ds.instances.size());
      inst.id = id;
      inst.label = c;
      std::vector<double> semantic(config.semantic_dim), emotion(config.emotion_dim);
      for (double& v : semantic) v = normal(rng);
      for (std::size_t k = 0; k < config.emotion_dim; ++k)
        emotion[k] = prototypes[c][k] + config.emotion_jitter * normal(rng);

      for (std::size_t m = 0; m < 3; ++m) {
        const std::size_t t_len = config.lengths[m], dim = config.dims[m];
        const double strength = config.modality_strengths[m];
        Tensor frames = Tensor::matrix(t_len, dim);
        for (std::size_t t = 0; t < t_len; ++t) {
          std::size_t o = 0;
          for (double v : semantic) z[o++] = v;
          for (double v : emotion) z[o++] = strength * v;
          const double phase = std::numbers::pi * static_cast<double>(t) /
                               static_cast<double>(t_len);
          z[o++] = std::sin(phase);
          z[o++] = std::cos(phase);
          for (std::size_t d = 0; d < dim; ++d) {
            double acc = 0.0;
            for (std::size_t k = 0; k < latent; ++k) acc += maps[m](d, k) * z[k];
            acc += config.noise_std * normal(rng);
            frames(t, d) = static_cast<double>(static_cast<float>(acc));
          }
        }
        inst.features[m] = std::move(frames);
      }
      ds.instances.push_back(std::move(inst));
    }
  }
  return ds;
}

}  // namespace cmarr
