#pragma once

// Tape-based reverse-mode differentiation. Nodes are appended in creation
// order, which is a topological order; backward walks the tape once in
// reverse.

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "embrec/nd/tensor.hpp"

namespace embrec::nd {

class Graph;

// Handle to a node of a Graph. Cheap to copy; only valid while the graph lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  Graph& graph() const { return *graph_; }
  std::uint32_t id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }

 private:
  friend class Graph;
  Var(Graph* graph, std::uint32_t id) : graph_(graph), id_(id) {}

  Graph* graph_ = nullptr;
  std::uint32_t id_ = 0;
};

using GradMap = std::map<std::string, Tensor>;

class Graph {
 public:
  // Receives the node's output gradient; pushes contributions to inputs via
  // Graph::accumulate.
  using BackwardFn = std::function<void(Graph& graph, const Tensor& out_grad)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Leaf without gradient.
  Var constant(Tensor value);

  // Leaf whose gradient can be read back through grad() after backward.
  Var input(Tensor value, bool requires_grad = true);

  // Named trainable leaf. The tensor is referenced, not copied, and must
  // outlive the graph. Registering the same name twice yields the same node.
  Var parameter(const std::string& name, const Tensor& value);

  // Runs reverse accumulation from a single-element loss. All gradients are
  // reset first. Returns one gradient per registered parameter, zero-filled
  // for parameters the loss does not reach.
  GradMap backward(Var loss);

  // Gradient of any node after backward; zero tensor when unreached.
  Tensor grad(Var v) const;

  std::size_t node_count() const { return nodes_.size(); }

  // --- interface for operation implementations ---
  Var record(Tensor value, std::vector<Var> inputs, BackwardFn backward);
  const Tensor& value(std::uint32_t id) const;
  bool needs_grad(Var v) const { return node(v).needs_grad; }
  // Gradient accumulator of an input node, zero-initialized on first use.
  Tensor& accumulate(Var v);

 private:
  struct Node {
    Tensor owned;
    const Tensor* external = nullptr;
    std::vector<std::uint32_t> inputs;
    BackwardFn backward;
    bool needs_grad = false;
    Tensor grad;
    bool has_grad = false;
    std::string name;
  };

  Node& node(Var v);
  const Node& node(Var v) const;
  Var push(Node n);

  std::deque<Node> nodes_;
  std::map<std::string, std::uint32_t> parameters_;
};

}  // namespace embrec::nd
