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

#include <cstddef>
#include <span>

namespace cmarr {

/// Weighted average recall: the fraction of correct predictions.
double war(std::span<const std::size_t> preds, std::span<const std::size_t> labels);
/// Unweighted average recall: mean per-class recall over classes present in `labels`.
double uar(std::span<const std::size_t> preds, std::span<const std::size_t> labels);

}  // namespace cmarr
