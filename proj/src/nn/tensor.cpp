#include "polydub/nn/tensor.hpp"

#include <unordered_set>

namespace polydub::nn {

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value.assign(static_cast<size_t>(n->numel()), 0.0f);
  n->requires_grad = requires_grad;
  return Tensor(n);
}

Tensor Tensor::full(std::vector<int> shape, float v, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  for (auto& x : t.data()) x = v;
  return t;
}

Tensor Tensor::from(std::vector<int> shape, std::vector<float> data, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  if (static_cast<int64_t>(data.size()) != n->numel())
    throw std::invalid_argument("Tensor::from: data size does not match shape");
  n->value = std::move(data);
  n->requires_grad = requires_grad;
  return Tensor(n);
}

Tensor Tensor::scalar(float v) { return from({1}, {v}); }

Tensor Tensor::randn(std::vector<int> shape, Rng& rng, float stdev, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  for (auto& x : t.data()) x = static_cast<float>(rng.normal()) * stdev;
  return t;
}

float Tensor::item() const {
  if (!node_ || node_->value.size() != 1)
    throw std::logic_error("Tensor::item: not a scalar");
  return node_->value[0];
}

std::vector<float>& Tensor::grad() {
  node_->ensure_grad();
  return node_->grad;
}

void Tensor::backward() {
  if (!node_) throw std::logic_error("backward on undefined tensor");
  if (node_->value.size() != 1) throw std::logic_error("backward: root must be scalar");

  // Iterative post-order topological sort.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, idx] = stack.back();
    if (idx < n->parents.size()) {
      Node* p = n->parents[idx].get();
      ++idx;
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  node_->ensure_grad();
  node_->grad[0] = 1.0f;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backprop) {
      for (auto& p : n->parents)
        if (p->requires_grad) p->ensure_grad();
      n->backprop(*n);
    }
  }
}

}  // namespace polydub::nn
