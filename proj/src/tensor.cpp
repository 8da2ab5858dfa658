#include "tpseg/tensor.hpp"

#include <unordered_set>

namespace tpseg::ad {

std::size_t shape_numel(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw DimensionError("negative dimension in shape " + shape_str(shape));
    n *= std::size_t(d);
  }
  return n;
}

std::string shape_str(const std::vector<int>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor Tensor::leaf(std::vector<int> shape, std::vector<double> values,
                    bool requires_grad) {
  if (shape_numel(shape) != values.size())
    throw DimensionError("value count " + std::to_string(values.size()) +
                         " does not match shape " + shape_str(shape));
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(values);
  n->requires_grad = requires_grad;
  n->needs_grad = requires_grad;
  return wrap(std::move(n));
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  const std::size_t n = shape_numel(shape);
  return leaf(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::full(std::vector<int> shape, double v, bool requires_grad) {
  const std::size_t n = shape_numel(shape);
  return leaf(std::move(shape), std::vector<double>(n, v), requires_grad);
}

const std::vector<double>& Tensor::grad() const {
  if (!has_grad())
    throw DataError(std::string("gradient not populated for node op=") + node_->op);
  return node_->grad;
}

Graph build_graph(const Tensor& sink) {
  if (!sink.defined()) throw DataError("backward on undefined tensor");
  Graph g;
  g.sink = sink.node();
  // Iterative post-order DFS over parents; order gets children after all of
  // their ancestors, i.e. topological with sink last.
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(g.sink.get(), 0);
  visited.insert(g.sink.get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      Node* p = node->parents[idx].get();
      ++idx;
      if (visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      g.order.push_back(node);
      stack.pop_back();
    }
  }
  return g;
}

void backward(Graph& g) {
  if (g.sink->numel() != 1)
    throw DimensionError("backward sink must be scalar, got shape " +
                         shape_str(g.sink->shape));
  g.sink->ensure_grad();
  g.sink->grad[0] += 1.0;
  for (auto it = g.order.rbegin(); it != g.order.rend(); ++it) {
    Node* n = *it;
    if (!n->backprop || !n->needs_grad) continue;
    for (auto& p : n->parents)
      if (p->needs_grad) p->ensure_grad();
    n->backprop();
  }
}

void backward(const Tensor& sink) {
  Graph g = build_graph(sink);
  backward(g);
}

}  // namespace tpseg::ad
