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

#include "cmarr/evalcli/metrics.hpp"

#include <map>

#include "cmarr/error.hpp"

namespace cmarr {

namespace {

void require_pairs(std::span<const std::size_t> preds, std::span<const std::size_t> labels) {
  if (preds.empty() || preds.size() != labels.size()) {
    throw ArgumentError("metrics need equal non-zero numbers of predictions and labels (got " +
                        std::to_string(preds.size()) + " and " + std::to_string(labels.size()) +
                        ")");
  }
}

}  // namespace

double war(std::span<const std::size_t> preds, std::span<const std::size_t> labels) {
  require_pairs(preds, labels);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) correct += preds[i] == labels[i];
  return static_cast<double>(correct) / static_cast<double>(preds.size());
}

double uar(std::span<const std::size_t> preds, std::span<const std::size_t> labels) {
  require_pairs(preds, labels);
  std::map<std::size_t, std::pair<std::size_t, std::size_t>> per_class;  // hits, total
  for (std::size_t i = 0; i < preds.size(); ++i) {
    auto& [hits, total] = per_class[labels[i]];
    hits += preds[i] == labels[i];
    ++total;
  }
  double sum = 0.0;
  for (const auto& [label, counts] : per_class) {
    sum += static_cast<double>(counts.first) / static_cast<double>(counts.second);
  }
  return sum / static_cast<double>(per_class.size());
}

}  // namespace cmarr
