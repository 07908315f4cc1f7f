// Copyright 2026 The samdistill Authors
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

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <functional>
#include <string>
#include <memory>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "samdistill/core/tensor.hpp"

// Reverse-mode autodiff on dynamically built graphs.
//
// Design notes:
//  * backward() is pure: it returns gradients in a GradMapT instead of
//    mutating nodes. Absence of an entry means the gradient is identically
//    zero, which makes "no gradient ever reached this parameter" an exact,
//    testable statement rather than a float comparison.
//  * Node ids increase monotonically as the graph is built, so visiting
//    reachable nodes in decreasing id order is a reverse topological order.
//  * Graphs are single-use: run forward, run backward, drop the root. Leaf
//    values may be mutated (optimizer steps) only after the graph built from
//    them has been discarded.

namespace samdistill::core {

template <class S>
struct NodeT;

template <class S>
using NodePtr = std::shared_ptr<NodeT<S>>;

template <class S>
class GradMapT;

template <class S>
struct GradSinkT;

template <class S>
using BackwardFnT =
    std::function<void(const TensorT<S>& gout, const GradSinkT<S>& sink)>;

template <class S>
struct NodeT {
  TensorT<S> value;
  bool requires_grad = false;
  uint64_t id = 0;
  std::vector<NodePtr<S>> parents;
  BackwardFnT<S> backward;  // empty for leaves and constants
};

inline thread_local int g_no_grad_depth = 0;

inline bool grad_enabled() { return g_no_grad_depth == 0; }

// While alive, newly created ops are constants: no parents, no backward.
struct NoGradGuard {
  NoGradGuard() { ++g_no_grad_depth; }
  ~NoGradGuard() { --g_no_grad_depth; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};

template <class S>
inline uint64_t next_node_id() {
  static std::atomic<uint64_t> counter{0};
  return ++counter;
}

template <class S>
class VarT {
 public:
  VarT() = default;
  explicit VarT(NodePtr<S> node) : node_(std::move(node)) {}

  static VarT leaf(TensorT<S> value, bool requires_grad) {
    auto n = std::make_shared<NodeT<S>>();
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    n->id = next_node_id<S>();
    return VarT(n);
  }

  static VarT constant(TensorT<S> value) { return leaf(std::move(value), false); }

  bool defined() const { return node_ != nullptr; }
  const TensorT<S>& value() const { return node_->value; }
  // For optimizer updates on leaves. Never mutate a value while a graph
  // that reads it is still alive.
  TensorT<S>& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  int64_t numel() const { return node_->value.numel(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  S item() const { return node_->value.item(); }

  // Same value, no history: gradients never flow past a detach.
  VarT detach() const { return constant(node_->value); }

  NodeT<S>* node() const { return node_.get(); }
  const NodePtr<S>& node_ptr() const { return node_; }

 private:
  NodePtr<S> node_;
};

template <class S>
class GradMapT {
 public:
  // nullptr means the gradient is exactly zero (never touched).
  const TensorT<S>* find(const VarT<S>& v) const { return find_node(v.node()); }

  const TensorT<S>* find_node(const NodeT<S>* n) const {
    auto it = grads_.find(n);
    return it == grads_.end() ? nullptr : &it->second;
  }

  TensorT<S>& accum(const NodeT<S>* n) {
    auto it = grads_.find(n);
    if (it == grads_.end()) {
      it = grads_.emplace(n, TensorT<S>(n->value.shape())).first;
    }
    return it->second;
  }

  void erase(const NodeT<S>* n) { grads_.erase(n); }
  size_t size() const { return grads_.size(); }

 private:
  // unordered_map keeps element addresses stable across inserts, which the
  // backward loop relies on (it holds a reference while ops insert).
  std::unordered_map<const NodeT<S>*, TensorT<S>> grads_;
};

// Handed to op backward functions. sink(i) returns the accumulator for
// parent i, or nullptr when that parent needs no gradient; the op must then
// skip the corresponding work.
template <class S>
struct GradSinkT {
  NodeT<S>* node;
  GradMapT<S>* map;

  TensorT<S>* operator()(size_t i) const {
    NodeT<S>* p = node->parents[i].get();
    if (!p->requires_grad) return nullptr;
    return &map->accum(p);
  }
};

// Build an op node. If gradients are disabled or no parent requires them,
// the result is a constant and the backward closure is dropped immediately.
template <class S>
VarT<S> make_op(TensorT<S> value, std::vector<VarT<S>> parents,
                BackwardFnT<S> backward) {
  bool rg = false;
  if (grad_enabled()) {
    for (const auto& p : parents) rg = rg || p.requires_grad();
  }
  auto n = std::make_shared<NodeT<S>>();
  n->value = std::move(value);
  n->id = next_node_id<S>();
  if (rg) {
    n->requires_grad = true;
    n->parents.reserve(parents.size());
    for (auto& p : parents) n->parents.push_back(p.node_ptr());
    n->backward = std::move(backward);
  }
  return VarT<S>(n);
}

// Reverse-mode sweep from a scalar root. Returns gradients for every leaf
// reached; gradients of interior nodes are dropped once consumed.
template <class S>
GradMapT<S> backward(const VarT<S>& root) {
  if (!root.defined()) throw Error("backward: undefined root");
  if (root.numel() != 1) {
    throw ShapeError("backward: root must be scalar, got " +
                     shape_str(root.shape()));
  }
  GradMapT<S> grads;
  if (!root.requires_grad()) return grads;

  std::vector<NodeT<S>*> order;
  std::unordered_set<const NodeT<S>*> seen;
  std::vector<NodeT<S>*> stack{root.node()};
  seen.insert(root.node());
  while (!stack.empty()) {
    NodeT<S>* n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (const auto& p : n->parents) {
      if (p->requires_grad && seen.insert(p.get()).second) {
        stack.push_back(p.get());
      }
    }
  }
  std::sort(order.begin(), order.end(),
            [](const NodeT<S>* a, const NodeT<S>* b) { return a->id > b->id; });

  grads.accum(root.node())[0] = S(1);
  for (NodeT<S>* n : order) {
    if (!n->backward) continue;  // leaf: keep its gradient in the result
    const TensorT<S>* g = grads.find_node(n);
    if (!g) continue;
    GradSinkT<S> sink{n, &grads};
    n->backward(*g, sink);
    grads.erase(n);
  }
  return grads;
}

template <class S>
using NamedParamT = std::pair<std::string, VarT<S>>;

using Var = VarT<double>;
using VarF = VarT<float>;
using GradMap = GradMapT<double>;

}  // namespace samdistill::core
