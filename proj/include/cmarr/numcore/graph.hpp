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
#include <deque>
#include <functional>
#include <map>
#include <string>
#include <utility>

#include "cmarr/numcore/param_store.hpp"
#include "cmarr/numcore/tensor.hpp"

namespace cmarr {

class Graph;

/// Handle to a node of a Graph. Cheap to copy; only valid while its graph lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  Graph& graph() const { return *graph_; }
  int id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }

 private:
  friend class Graph;
  Var(Graph* g, int id) : graph_(g), id_(id) {}

  Graph* graph_ = nullptr;
  int id_ = -1;
};

/// Reverse-mode tape. Nodes are appended in evaluation order, so a reverse
/// sweep over node ids is a valid topological order for backpropagation.
/// A graph built with record=false keeps values only (inference mode).
class Graph {
 public:
  using Backward = std::function<void(Graph&, const Tensor& out_grad)>;

  explicit Graph(bool record = true) : record_(record) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  // Leaf bound to a ParamStore entry; repeated calls return the same node.
  Var param(ParamStore& store, const std::string& name);

  // Appends an op result. `bw` runs only if some parent requires a gradient.
  Var make(Tensor value, std::initializer_list<Var> parents, Backward bw);
  Var make(Tensor value, const std::vector<Var>& parents, Backward bw);

  const Tensor& value(Var v) const { return nodes_[v.id_].value; }
  bool requires_grad(Var v) const { return nodes_[v.id_].requires_grad; }
  void accumulate(Var v, const Tensor& g);
  void accumulate(Var v, Tensor&& g);

  // Seeds d(loss)/d(loss) = 1 and adds parameter gradients into their stores.
  void backward(Var loss);

  bool recording() const { return record_; }
  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool has_grad = false;
    Backward backward;
    ParamStore* store = nullptr;
    std::string param_name;
  };

  bool record_;
  std::deque<Node> nodes_;
  std::map<std::pair<const ParamStore*, std::string>, int> param_ids_;
};

inline const Tensor& Var::value() const { return graph_->value(*this); }

}  // namespace cmarr
