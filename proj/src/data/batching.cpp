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

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "cmarr/data/dataset.hpp"
#include "cmarr/error.hpp"

namespace cmarr {

std::vector<Batch> make_batches(std::span<const std::size_t> indices,
                                std::size_t batch_size, std::uint64_t seed, bool shuffle) {
  if (batch_size < 2) throw ArgumentError("batch size must be at least 2");
  if (indices.size() < 2) throw ArgumentError("batching needs at least 2 instances");
  std::vector<std::size_t> order(indices.begin(), indices.end());
  if (shuffle) {
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
  }
  std::vector<Batch> out;
  for (std::size_t b = 0; b < order.size(); b += batch_size) {
    const std::size_t e = std::min(order.size(), b + batch_size);
    if (e - b < 2 && !out.empty()) {
      out.back().indices.insert(out.back().indices.end(), order.begin() + static_cast<std::ptrdiff_t>(b),
                                order.begin() + static_cast<std::ptrdiff_t>(e));
      continue;
    }
    Batch batch;
    batch.indices.assign(order.begin() + static_cast<std::ptrdiff_t>(b),
                         order.begin() + static_cast<std::ptrdiff_t>(e));
    out.push_back(std::move(batch));
  }
  return out;
}

std::vector<Batch> make_batches(const Dataset& dataset, std::size_t batch_size,
                                std::uint64_t seed, bool shuffle) {
  std::vector<std::size_t> all(dataset.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return make_batches(all, batch_size, seed, shuffle);
}

namespace {

std::map<std::size_t, std::vector<std::size_t>> shuffled_by_class(const Dataset& dataset,
                                                                  std::uint64_t seed) {
  std::map<std::size_t, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < dataset.size(); ++i)
    by_class[dataset.instances[i].label].push_back(i);
  std::mt19937_64 rng(seed);
  for (auto& [label, members] : by_class) std::shuffle(members.begin(), members.end(), rng);
  return by_class;
}

}  // namespace

Split stratified_split(const Dataset& dataset, std::uint64_t seed) {
  Split split;
  for (const auto& [label, members] : shuffled_by_class(dataset, seed)) {
    const std::size_t n = members.size();
    const auto n_train = static_cast<std::size_t>(std::lround(0.70 * static_cast<double>(n)));
    const auto n_val = std::min(
        n - n_train, static_cast<std::size_t>(std::lround(0.15 * static_cast<double>(n))));
    for (std::size_t i = 0; i < n; ++i) {
      if (i < n_train) split.train.push_back(members[i]);
      else if (i < n_train + n_val) split.validation.push_back(members[i]);
      else split.test.push_back(members[i]);
    }
  }
  for (auto* part : {&split.train, &split.validation, &split.test})
    std::sort(part->begin(), part->end());
  return split;
}

Split kfold_split(const Dataset& dataset, std::size_t folds, std::size_t fold,
                  std::uint64_t seed) {
  if (folds < 3) throw ArgumentError("k-fold mode needs at least 3 folds");
  if (fold >= folds) throw ArgumentError("fold index out of range");
  Split split;
  const std::size_t val_fold = (fold + 1) % folds;
  for (const auto& [label, members] : shuffled_by_class(dataset, seed)) {
    for (std::size_t i = 0; i < members.size(); ++i) {
      const std::size_t f = i % folds;
      if (f == fold) split.test.push_back(members[i]);
      else if (f == val_fold) split.validation.push_back(members[i]);
      else split.train.push_back(members[i]);
    }
  }
  for (auto* part : {&split.train, &split.validation, &split.test})
    std::sort(part->begin(), part->end());
  return split;
}

}  // namespace cmarr
