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

#include "cmarr/numcore/param_store.hpp"

#include "cmarr/error.hpp"

namespace cmarr {

Tensor& ParamStore::add(const std::string& name, Tensor value) {
  Entry e;
  e.grad = Tensor(value.shape(), 0.0);
  e.value = std::move(value);
  auto& slot = entries_[name];
  slot = std::move(e);
  return slot.value;
}

ParamStore::Entry& ParamStore::entry(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ArgumentError("unknown parameter '" + name + "'");
  return it->second;
}

const ParamStore::Entry& ParamStore::entry(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ArgumentError("unknown parameter '" + name + "'");
  return it->second;
}

Tensor& ParamStore::value(const std::string& name) { return entry(name).value; }
const Tensor& ParamStore::value(const std::string& name) const { return entry(name).value; }
Tensor& ParamStore::grad(const std::string& name) { return entry(name).grad; }
const Tensor& ParamStore::grad(const std::string& name) const { return entry(name).grad; }

void ParamStore::zero_grad() {
  for (auto& [name, e] : entries_) e.grad.fill(0.0);
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, e] : entries_) n += e.value.size();
  return n;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, e] : entries_) out.push_back(name);
  return out;
}

bool ParamStore::values_equal(const ParamStore& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  auto it = other.entries_.begin();
  for (const auto& [name, e] : entries_) {
    if (it->first != name || !(it->second.value == e.value)) return false;
    ++it;
  }
  return true;
}

}  // namespace cmarr
