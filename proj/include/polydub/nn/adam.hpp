#pragma once

#include <cmath>
#include <vector>

#include "polydub/nn/tensor.hpp"

namespace polydub::nn {

class Adam {
 public:
  explicit Adam(std::vector<Tensor> params, float lr = 2e-3f, float beta1 = 0.9f,
                float beta2 = 0.999f, float eps = 1e-8f)
      : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.resize(params_.size());
    v_.resize(params_.size());
    for (size_t i = 0; i < params_.size(); ++i) {
      m_[i].assign(params_[i].data().size(), 0.0f);
      v_[i].assign(params_[i].data().size(), 0.0f);
    }
  }

  void set_lr(float lr) { lr_ = lr; }
  float lr() const { return lr_; }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  void step() {
    ++t_;
    const float bc1 = 1.0f - std::pow(beta1_, static_cast<float>(t_));
    const float bc2 = 1.0f - std::pow(beta2_, static_cast<float>(t_));
    for (size_t i = 0; i < params_.size(); ++i) {
      auto& val = params_[i].data();
      auto& g = params_[i].grad();
      auto& m = m_[i];
      auto& v = v_[i];
      for (size_t j = 0; j < val.size(); ++j) {
        m[j] = beta1_ * m[j] + (1.0f - beta1_) * g[j];
        v[j] = beta2_ * v[j] + (1.0f - beta2_) * g[j] * g[j];
        const float mhat = m[j] / bc1;
        const float vhat = v[j] / bc2;
        val[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
      }
    }
  }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<float>> m_, v_;
  float lr_, beta1_, beta2_, eps_;
  int64_t t_ = 0;
};

}  // namespace polydub::nn
