#include "embrec/nd/graph.hpp"

#include "embrec/errors.hpp"

namespace embrec::nd {

const Tensor& Var::value() const {
  if (!graph_) throw ContractError("use of an unbound Var");
  return graph_->value(id_);
}

Graph::Node& Graph::node(Var v) {
  if (v.graph_ != this || v.id_ >= nodes_.size()) {
    throw ContractError("Var does not belong to this graph");
  }
  return nodes_[v.id_];
}

const Graph::Node& Graph::node(Var v) const {
  if (v.graph_ != this || v.id_ >= nodes_.size()) {
    throw ContractError("Var does not belong to this graph");
  }
  return nodes_[v.id_];
}

const Tensor& Graph::value(std::uint32_t id) const {
  const Node& n = nodes_.at(id);
  return n.external ? *n.external : n.owned;
}

Var Graph::push(Node n) {
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Graph::constant(Tensor value) {
  Node n;
  n.owned = std::move(value);
  return push(std::move(n));
}

Var Graph::input(Tensor value, bool requires_grad) {
  Node n;
  n.owned = std::move(value);
  n.owned.set_requires_grad(requires_grad);
  n.needs_grad = requires_grad;
  return push(std::move(n));
}

Var Graph::parameter(const std::string& name, const Tensor& value) {
  if (auto it = parameters_.find(name); it != parameters_.end()) {
    if (nodes_[it->second].external != &value) {
      throw ContractError("parameter '" + name + "' registered with two different tensors");
    }
    return Var(this, it->second);
  }
  Node n;
  n.external = &value;
  n.needs_grad = true;
  n.name = name;
  Var v = push(std::move(n));
  parameters_.emplace(name, v.id_);
  return v;
}

Var Graph::record(Tensor value, std::vector<Var> inputs, BackwardFn backward) {
  Node n;
  n.owned = std::move(value);
  n.inputs.reserve(inputs.size());
  for (const Var& in : inputs) {
    const Node& src = node(in);
    n.inputs.push_back(in.id_);
    n.needs_grad = n.needs_grad || src.needs_grad;
  }
  if (n.needs_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

Tensor& Graph::accumulate(Var v) {
  Node& n = node(v);
  if (!n.has_grad) {
    n.grad = Tensor(value(v.id_).shape(), 0.0f);
    n.has_grad = true;
  }
  return n.grad;
}

GradMap Graph::backward(Var loss) {
  const Tensor& loss_value = node(loss).external ? *node(loss).external : node(loss).owned;
  if (loss_value.size() != 1) {
    throw ContractError("backward requires a scalar loss, got shape " +
                        to_string(loss_value.shape()));
  }
  for (Node& n : nodes_) {
    n.has_grad = false;
    n.grad = Tensor();
  }
  accumulate(loss).fill(1.0f);
  for (std::uint32_t id = loss.id_ + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.has_grad || !n.backward) continue;
    n.backward(*this, n.grad);
  }
  GradMap grads;
  for (const auto& [name, id] : parameters_) {
    const Node& n = nodes_[id];
    grads.emplace(name, n.has_grad ? n.grad : Tensor(n.external->shape(), 0.0f));
  }
  return grads;
}

Tensor Graph::grad(Var v) const {
  const Node& n = node(v);
  if (n.has_grad) return n.grad;
  return Tensor(value(v.id_).shape(), 0.0f);
}

}  // namespace embrec::nd
