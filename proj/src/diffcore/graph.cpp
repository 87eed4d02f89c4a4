#include "ctxslu/diffcore.hpp"
#include "ctxslu/errors.hpp"

namespace ctxslu::diff {

const Shape& Var::shape() const { return graph_->node(index_).shape; }

std::span<const double> Var::values() const { return graph_->value(index_); }

double Var::scalar() const {
  auto v = values();
  if (v.size() != 1) throw DomainError("scalar() on tensor of shape " + shape_string(shape()));
  return v[0];
}

Tensor Var::tensor() const {
  auto v = values();
  Shape s = shape();
  if (s.empty()) s = {1};
  return Tensor(std::move(s), std::vector<double>(v.begin(), v.end()));
}

Graph::Graph(const ParameterStore& params) : params_(&params) { nodes_.reserve(256); }

void Graph::check_open() const {
  if (sealed_) throw StateError("computation record is sealed after backward()");
}

Var Graph::push(OpKind kind, Shape shape, std::vector<double> value,
                std::vector<std::uint32_t> inputs, BackwardFn backward) {
  check_open();
  Node n;
  n.kind = kind;
  n.size = value.size();
  n.shape = std::move(shape);
  n.value = std::move(value);
  for (auto i : inputs) n.requires_grad = n.requires_grad || nodes_[i].requires_grad;
  n.inputs = std::move(inputs);
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Graph::param(ParamId id) {
  check_open();
  auto it = param_nodes_.find(index_of(id));
  if (it != param_nodes_.end()) return Var(this, it->second);
  const Tensor& t = params_->tensor(id);
  Node n;
  n.kind = OpKind::kParam;
  n.shape = t.shape;
  n.external = t.values.data();
  n.size = t.values.size();
  n.param = id;
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  const auto idx = static_cast<std::uint32_t>(nodes_.size() - 1);
  param_nodes_.emplace(index_of(id), idx);
  return Var(this, idx);
}

Var Graph::param(std::string_view name) { return param(params_->id(name)); }

Var Graph::constant(Tensor value) {
  return push(OpKind::kConstant, std::move(value.shape), std::move(value.values), {}, nullptr);
}

std::span<const double> Graph::value(std::uint32_t i) const {
  const Node& n = nodes_[i];
  if (n.external) return {n.external, n.size};
  return n.value;
}

std::span<double> Graph::grad(std::uint32_t i) {
  Node& n = nodes_[i];
  if (n.grad.empty()) n.grad.assign(n.size, 0.0);
  return n.grad;
}

GradientMap Graph::backward(Var root) {
  GradientMap out;
  backward(root, out);
  return out;
}

void Graph::backward(Var root, GradientMap& into) {
  if (root.graph() != this) throw StateError("backward root belongs to a different graph");
  if (sealed_) throw StateError("backward() called twice on the same computation record");
  if (nodes_[root.index()].size != 1) {
    throw DomainError("backward root must be scalar, got shape " +
                      shape_string(nodes_[root.index()].shape));
  }
  sealed_ = true;
  std::vector<char> reached(nodes_.size(), 0);
  reached[root.index()] = 1;
  grad(root.index())[0] = 1.0;
  for (std::int64_t i = root.index(); i >= 0; --i) {
    const auto idx = static_cast<std::uint32_t>(i);
    if (!reached[idx] || !nodes_[idx].requires_grad) continue;
    Node& n = nodes_[idx];
    if (n.param) {
      into.accumulate(*n.param, grad(idx));
      continue;
    }
    if (n.backward) {
      grad(idx);
      n.backward(*this, idx);
      for (auto in : n.inputs) reached[in] = 1;
    }
  }
}

}  // namespace ctxslu::diff
