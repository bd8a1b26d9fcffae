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
#include <map>
#include <string>

#include "cmarr/numcore/param_store.hpp"

namespace cmarr {

/// Adaptive moment estimation with bias correction. A nonzero `weight_decay`
/// adds decoupled decay to weight matrices (names ending in ".w").
class Adam {
 public:
  explicit Adam(double learning_rate = 1e-3, double weight_decay = 0.0, double beta1 = 0.9,
                double beta2 = 0.999, double epsilon = 1e-8)
      : lr_(learning_rate), wd_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(epsilon) {}

  // Applies one update from the gradients currently held in `params`.
  void step(ParamStore& params);

  double learning_rate() const { return lr_; }
  std::uint64_t steps() const { return steps_; }

  std::map<std::string, Tensor>& first_moments() { return m_; }
  std::map<std::string, Tensor>& second_moments() { return v_; }
  const std::map<std::string, Tensor>& first_moments() const { return m_; }
  const std::map<std::string, Tensor>& second_moments() const { return v_; }
  void set_steps(std::uint64_t steps) { steps_ = steps; }

 private:
  double lr_, wd_, beta1_, beta2_, eps_;
  std::uint64_t steps_ = 0;
  std::map<std::string, Tensor> m_, v_;
};

}  // namespace cmarr
