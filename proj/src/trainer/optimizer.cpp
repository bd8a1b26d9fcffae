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

#include "cmarr/trainer/optimizer.hpp"

#include <cmath>

namespace cmarr {

void Adam::step(ParamStore& params) {
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(beta1_, t);
  const double c2 = 1.0 - std::pow(beta2_, t);
  for (auto& [name, entry] : params.entries()) {
    auto [mit, m_new] = m_.try_emplace(name, entry.value.shape(), 0.0);
    auto [vit, v_new] = v_.try_emplace(name, entry.value.shape(), 0.0);
    const bool decay = wd_ != 0.0 && name.ends_with(".w");
    auto m = mit->second.data();
    auto v = vit->second.data();
    auto w = entry.value.data();
    const auto g = entry.grad.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      const double shrink = decay ? wd_ * w[i] : 0.0;
      w[i] -= lr_ * ((m[i] / c1) / (std::sqrt(v[i] / c2) + eps_) + shrink);
    }
  }
}

}  // namespace cmarr
