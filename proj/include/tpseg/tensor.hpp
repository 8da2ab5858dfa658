#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "tpseg/common.hpp"

namespace tpseg::ad {

// Reverse-mode autodiff over dense NCHW double tensors. A Tensor is a value
// handle onto a graph node; ops in ops.hpp build child nodes whose backprop
// closures scatter gradients into their parents. Graphs are trees of
// shared_ptrs hanging off the final loss: dropping the loss frees every
// intermediate node while leaf parameters survive in their owners.
struct Node {
  std::vector<int> shape;
  std::vector<double> value;
  std::vector<double> grad;     // sized lazily during backward
  bool requires_grad = false;   // leaf flag
  bool needs_grad = false;      // requires_grad or depends on such a leaf
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void()> backprop;  // accumulates into parent grads

  std::size_t numel() const { return value.size(); }
  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

std::size_t shape_numel(const std::vector<int>& shape);
std::string shape_str(const std::vector<int>& shape);

class Tensor {
 public:
  Tensor() = default;

  static Tensor leaf(std::vector<int> shape, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  static Tensor full(std::vector<int> shape, double v,
                     bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const std::vector<int>& shape() const { return node_->shape; }
  int dim(int i) const { return node_->shape[std::size_t(i)]; }
  int ndim() const { return int(node_->shape.size()); }
  std::size_t size() const { return node_->numel(); }

  const std::vector<double>& values() const { return node_->value; }
  std::vector<double>& mutable_values() { return node_->value; }

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return node_->grad.size() == node_->value.size(); }
  const std::vector<double>& grad() const;
  void zero_grad() { node_->grad.clear(); }

  const std::shared_ptr<Node>& node() const { return node_; }
  static Tensor wrap(std::shared_ptr<Node> n) {
    Tensor t;
    t.node_ = std::move(n);
    return t;
  }

 private:
  std::shared_ptr<Node> node_;
};

// Topologically ordered operation record; sink is last. backward() seeds the
// scalar sink with gradient 1 and visits each node exactly once in reverse.
struct Graph {
  std::vector<Node*> order;
  std::shared_ptr<Node> sink;
};

Graph build_graph(const Tensor& sink);
void backward(Graph& g);
void backward(const Tensor& sink);

}  // namespace tpseg::ad
