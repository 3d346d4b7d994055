#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "polydub/common.hpp"

namespace polydub::nn {

// Reverse-mode autodiff over dense float32 tensors. One Node per op result;
// graphs are built per step and freed when the last Tensor handle dies.
struct Node {
  std::vector<int> shape;
  std::vector<float> value;
  std::vector<float> grad;  // allocated on demand, same size as value
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this->grad, accumulates into parents' grad.
  std::function<void(Node&)> backprop;

  int64_t numel() const {
    int64_t n = 1;
    for (int d : shape) n *= d;
    return n;
  }
  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0f);
  }
};

using NodePtr = std::shared_ptr<Node>;

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(NodePtr n) : node_(std::move(n)) {}

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  static Tensor full(std::vector<int> shape, float v, bool requires_grad = false);
  static Tensor from(std::vector<int> shape, std::vector<float> data,
                     bool requires_grad = false);
  static Tensor scalar(float v);
  static Tensor randn(std::vector<int> shape, Rng& rng, float stdev,
                      bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const std::vector<int>& shape() const { return node_->shape; }
  int dim(int i) const { return node_->shape[static_cast<size_t>(i)]; }
  int ndim() const { return static_cast<int>(node_->shape.size()); }
  int64_t numel() const { return node_->numel(); }
  float item() const;

  std::vector<float>& data() { return node_->value; }
  const std::vector<float>& data() const { return node_->value; }
  std::vector<float>& grad();

  bool requires_grad() const { return node_ && node_->requires_grad; }
  void set_requires_grad(bool rg) { node_->requires_grad = rg; }
  void zero_grad() {
    if (node_) node_->grad.assign(node_->value.size(), 0.0f);
  }

  // Backpropagates from this scalar through the graph.
  void backward();

  NodePtr node() const { return node_; }

 private:
  NodePtr node_;
};

}  // namespace polydub::nn
