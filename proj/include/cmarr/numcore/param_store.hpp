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
#include <map>
#include <string>
#include <vector>

#include "cmarr/numcore/tensor.hpp"

namespace cmarr {

/// Named trainable parameters with matching gradient accumulators.
/// Iteration is ordered by path, so every traversal is deterministic.
class ParamStore {
 public:
  struct Entry {
    Tensor value;
    Tensor grad;
  };

  // Adds (or replaces) a parameter; its gradient is reset to zeros.
  Tensor& add(const std::string& name, Tensor value);

  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  Tensor& value(const std::string& name);
  const Tensor& value(const std::string& name) const;
  Tensor& grad(const std::string& name);
  const Tensor& grad(const std::string& name) const;

  void zero_grad();
  std::size_t scalar_count() const;
  std::vector<std::string> names() const;

  std::map<std::string, Entry>& entries() { return entries_; }
  const std::map<std::string, Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  // True when both stores hold the same names with bitwise-equal values.
  bool values_equal(const ParamStore& other) const;

 private:
  Entry& entry(const std::string& name);
  const Entry& entry(const std::string& name) const;

  std::map<std::string, Entry> entries_;
};

}  // namespace cmarr
