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

#include "cmarr/numcore/graph.hpp"

#include "cmarr/error.hpp"

namespace cmarr {

Var Graph::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Graph::param(ParamStore& store, const std::string& name) {
  auto key = std::make_pair(static_cast<const ParamStore*>(&store), name);
  if (auto it = param_ids_.find(key); it != param_ids_.end()) {
    return Var(this, it->second);
  }
  Node n;
  n.value = store.value(name);
  n.requires_grad = record_;
  n.store = &store;
  n.param_name = name;
  nodes_.push_back(std::move(n));
  const int id = static_cast<int>(nodes_.size() - 1);
  param_ids_.emplace(std::move(key), id);
  return Var(this, id);
}

Var Graph::make(Tensor value, std::initializer_list<Var> parents, Backward bw) {
  Node n;
  n.value = std::move(value);
  if (record_) {
    for (const Var& p : parents) {
      if (p.graph_ != this) throw ArgumentError("variable belongs to another graph");
      if (nodes_[p.id_].requires_grad) n.requires_grad = true;
    }
    if (n.requires_grad) n.backward = std::move(bw);
  }
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Graph::make(Tensor value, const std::vector<Var>& parents, Backward bw) {
  Node n;
  n.value = std::move(value);
  if (record_) {
    for (const Var& p : parents) {
      if (p.graph_ != this) throw ArgumentError("variable belongs to another graph");
      if (nodes_[p.id_].requires_grad) n.requires_grad = true;
    }
    if (n.requires_grad) n.backward = std::move(bw);
  }
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

void Graph::accumulate(Var v, const Tensor& g) {
  Node& n = nodes_[v.id_];
  if (!n.requires_grad) return;
  if (!n.has_grad) {
    n.grad = g;
    n.has_grad = true;
    return;
  }
  auto dst = n.grad.data();
  auto src = g.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void Graph::accumulate(Var v, Tensor&& g) {
  Node& n = nodes_[v.id_];
  if (!n.requires_grad) return;
  if (!n.has_grad) {
    n.grad = std::move(g);
    n.has_grad = true;
    return;
  }
  auto dst = n.grad.data();
  auto src = g.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void Graph::backward(Var loss) {
  if (!record_) throw ArgumentError("backward on a non-recording graph");
  if (loss.graph_ != this) throw ArgumentError("loss belongs to another graph");
  if (nodes_[loss.id_].value.size() != 1) throw ShapeError("backward requires a scalar loss");
  if (!nodes_[loss.id_].requires_grad) return;
  accumulate(loss, Tensor(nodes_[loss.id_].value.shape(), 1.0));
  for (int i = loss.id_; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.has_grad) continue;
    if (n.backward) {
      n.backward(*this, n.grad);
    } else if (n.store != nullptr) {
      auto dst = n.store->grad(n.param_name).data();
      auto src = n.grad.data();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
  }
}

}  // namespace cmarr
